#pragma once

namespace conceptflow::stats {

/// Regularized incomplete beta I_x(a, b). `complement` must equal 1 - x; it
/// is passed separately so callers can supply it without cancellation.
double incomplete_beta(double a, double b, double x, double complement);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided(double t, double dof);

}  // namespace conceptflow::stats
