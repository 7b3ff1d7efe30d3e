#pragma once

#include <stdexcept>

namespace surfload {

/// Numerical result failed its convergence check.
struct accuracy_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A fit was degenerate or did not converge.
struct fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace surfload
