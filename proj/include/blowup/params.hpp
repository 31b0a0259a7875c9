#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace blowup {

/// Bad argument or a point outside the domain of a closed form.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Invalid configuration value.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside a solver (NaN, singular system, lost positivity).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Model constants. delta0 unset means 0.2*|hat_u(1)|.
struct SimParams {
    double alpha = 1.0;
    int dim = 1;
    double T = 1.0;
    double s0 = 10.0;
    double K0 = 5.0;
    double A = 20.0;
    double eps0 = 0.5;
    double alpha0 = 0.25;
    std::optional<double> delta0;
    double eta0 = 0.1;
    double C0 = 50.0;
    double C0prime = 2.0;
    double a_far = 1.0;

    double t0() const { return T - std::exp(-s0); }

    // c = 1/(4+4a), the coefficient of |z|^2 in the profile
    double c_profile() const { return 1.0 / (4.0 + 4.0 * alpha); }

    double delta0_value() const;

    void validate() const {
        auto need = [](bool ok, const std::string& msg) {
            if (!ok) throw ValidationError(msg);
        };
        need(alpha > -1.0, "alpha must satisfy alpha > -1");
        need(dim >= 1, "dim must be a positive integer");
        need(T > 0.0, "T must be positive");
        need(s0 >= 1.0, "s0 must be >= 1");
        need(K0 >= 1.0, "K0 must be >= 1");
        need(A >= 1.0, "A must be >= 1");
        need(eps0 > 0.0, "eps0 must be positive");
        need(alpha0 > 0.0, "alpha0 must be positive");
        need(!delta0 || *delta0 > 0.0, "delta0 must be positive");
        need(eta0 >= 0.0, "eta0 must be >= 0");
        need(C0 > 0.0 && C0prime > 0.0, "C0 and C0prime must be positive");
        need(a_far > 0.0, "a_far must be positive");
    }
};

inline double SimParams::delta0_value() const {
    if (delta0) return *delta0;
    // hat_u(1) = -ln((K0^2/16)/(4+4a))
    return 0.2 * std::abs(std::log((K0 * K0 / 16.0) * c_profile()));
}

enum class RunStatus { ok, stopped, blowup, numerical_failure };

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::ok: return "ok";
        case RunStatus::stopped: return "stopped";
        case RunStatus::blowup: return "blowup";
        case RunStatus::numerical_failure: return "numerical_failure";
    }
    return "?";
}

}  // namespace blowup
