#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace robinsub {

// Bad input or violated precondition.
class invalid_argument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Iterative method gave up. Keeps the last iterate for diagnostics.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, std::vector<double> last = {}, double residual = -1.0)
        : std::runtime_error(what), last_iterate(std::move(last)), last_residual(residual) {}

    std::vector<double> last_iterate;
    double last_residual;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw invalid_argument(msg);
}

} // namespace robinsub
