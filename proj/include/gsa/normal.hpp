#pragma once

namespace gsa {

/// Standard normal CDF.
double norm_cdf(double z);

/// Standard normal density.
double norm_pdf(double z);

/// Inverse of the standard normal CDF (Wichura's AS 241, PPND16).
/// Relative accuracy is about 1e-16 over (0, 1). Throws DomainError
/// unless 0 < p < 1.
double inv_norm_cdf(double p);

}  // namespace gsa
