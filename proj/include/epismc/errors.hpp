#pragma once

#include <stdexcept>
#include <string>

namespace epismc {

// All engine failures derive from error so callers can catch one type at the
// CLI boundary; subtypes exist where tests or callers need to distinguish.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_parameter_error : error { using error::error; };

// numerical domain violations (e.g. per-contact infection probability >= 1)
struct domain_error : error { using error::error; };

struct config_error : error { using error::error; };

struct data_error : error { using error::error; };

struct degenerate_weights_error : error { using error::error; };

// proposal covariance not positive definite after regularization
struct kernel_degeneracy_error : error { using error::error; };

// no clusters with more than one member: r_A cannot be formed
struct icc_undefined_error : error { using error::error; };

struct checkpoint_error : error { using error::error; };

struct diagnostic_error : error { using error::error; };

}  // namespace epismc
