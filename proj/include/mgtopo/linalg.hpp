/// @file linalg.hpp
/// @brief DOF vectors, deterministic reductions and the linear-operator
/// interface shared by the solvers.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mgtopo {

using Vector = std::vector<double>;

/// Reductions sum fixed-size blocks in index order, so results do not depend
/// on the number of threads.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);
void fill(std::span<double> y, double v);
void copy(std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> x);

class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual std::size_t size() const = 0;
    /// out = A * in; `in` and `out` must not alias.
    virtual void apply(std::span<const double> in, std::span<double> out) const = 0;
};

/// Validates a vector length, throwing std::invalid_argument naming `what`.
void check_size(std::span<const double> v, std::size_t n, const char* what);

}  // namespace mgtopo
