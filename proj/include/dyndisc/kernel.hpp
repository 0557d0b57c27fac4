#pragma once

#include <stdexcept>

namespace dyndisc {

/// Bernoulli polynomials B1, B2, B4 on [0,1].
template <typename Scalar>
Scalar bernoulli_poly(int degree, Scalar u) {
  if (u < Scalar(0) || u > Scalar(1))
    throw std::domain_error("bernoulli_poly: argument outside [0,1]");
  switch (degree) {
    case 1:
      return u - Scalar(0.5);
    case 2:
      return u * u - u + Scalar(1) / Scalar(6);
    case 4: {
      const Scalar u2 = u * u;
      return u2 * u2 - Scalar(2) * u2 * u + u2 - Scalar(1) / Scalar(30);
    }
    default:
      throw std::invalid_argument("bernoulli_poly: unsupported degree");
  }
}

/// Smoothing-spline ANOVA main-effect kernel on [0,1]^2,
/// K1(u,u') = B1(u)B1(u') + B2(u)B2(u') - B4(|u-u'|)/24.
template <typename Scalar>
Scalar k1(Scalar u, Scalar u2) {
  if (u < Scalar(0) || u > Scalar(1) || u2 < Scalar(0) || u2 > Scalar(1))
    throw std::domain_error("k1: arguments must lie in [0,1]");
  const Scalar d = u >= u2 ? u - u2 : u2 - u;
  return bernoulli_poly(1, u) * bernoulli_poly(1, u2) +
         bernoulli_poly(2, u) * bernoulli_poly(2, u2) -
         bernoulli_poly(4, d) / Scalar(24);
}

/// Two-way interaction kernel, the tensor product of K1 factors.
template <typename Scalar>
Scalar k2(Scalar u, Scalar v, Scalar u2, Scalar v2) {
  return k1(u, u2) * k1(v, v2);
}

}  // namespace dyndisc
