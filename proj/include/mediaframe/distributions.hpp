#ifndef MEDIAFRAME_DISTRIBUTIONS_HPP
#define MEDIAFRAME_DISTRIBUTIONS_HPP

namespace mediaframe {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_beta(double x, double a, double b);

/// Upper-tail probability P(F > f) for F(df1, df2). Throws DomainError on df <= 0.
double f_p_value(double f, double df1, double df2);

/// Two-sided probability P(|T| > |t|) for Student t with `df` degrees of freedom.
double t_p_value(double t, double df);

}  // namespace mediaframe

#endif  // MEDIAFRAME_DISTRIBUTIONS_HPP
