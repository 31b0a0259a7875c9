#pragma once

#include <lapacke.h>

#include <string>
#include <vector>

#include "params.hpp"

namespace blowup {

/// LU of a banded matrix with partial pivoting (LAPACK gbtrf/gbtrs).
class BandedLU {
public:
    BandedLU() = default;
    BandedLU(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(static_cast<std::size_t>(ldab_) * n, 0.0), ipiv_(n) {}

    int size() const { return n_; }

    /// Entry (i, j) with |i - j| inside the band. Call before factor().
    void set(int i, int j, double v) { ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_] = v; }

    void factor() {
        const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_, ab_.data(), ldab_, ipiv_.data());
        if (info != 0) throw SolverError("banded LU failed, info = " + std::to_string(info));
    }

    void solve(std::vector<double>& rhs) const {
        const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 1, ab_.data(), ldab_, ipiv_.data(), rhs.data(), n_);
        if (info != 0) throw SolverError("banded solve failed, info = " + std::to_string(info));
    }

private:
    int n_ = 0, kl_ = 0, ku_ = 0, ldab_ = 1;
    std::vector<double> ab_;
    std::vector<lapack_int> ipiv_;
};

/// Solves a tridiagonal system in place (LAPACK gtsv). lower/upper have n-1 entries.
inline void solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper, std::vector<double>& rhs) {
    const auto n = static_cast<lapack_int>(diag.size());
    const lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, n, 1, lower.data(), diag.data(), upper.data(), rhs.data(), n);
    if (info != 0) throw SolverError("tridiagonal solve failed, info = " + std::to_string(info));
}

}  // namespace blowup
