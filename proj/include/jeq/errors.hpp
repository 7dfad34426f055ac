#pragma once

#include <stdexcept>
#include <string>

namespace jeq {

/// Base class for every failure the workbench reports. Each concrete type
/// names the condition it certifies; messages carry the offending values.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define JEQ_ERROR_TYPE(Name)            \
  struct Name : Error {                 \
    using Error::Error;                 \
  }

// Geometry and field preconditions.
JEQ_ERROR_TYPE(NonPositiveMetric);   // a metric field lost positivity
JEQ_ERROR_TYPE(NonPositiveWeight);   // weight field <= 0 somewhere
JEQ_ERROR_TYPE(NonPositiveDensity);  // measure density <= 0 somewhere
JEQ_ERROR_TYPE(NotNormalized);       // measure mass differs from 1

// Nonlinear and linear solver failures.
JEQ_ERROR_TYPE(NewtonStalled);       // no acceptable damped step
JEQ_ERROR_TYPE(LinearSolveFailed);   // Krylov iteration did not converge
JEQ_ERROR_TYPE(MaxIters);            // Newton iteration budget exhausted
JEQ_ERROR_TYPE(ContinuationFailed);  // t-step underflow on the path

// Fiber model near the divisor.
JEQ_ERROR_TYPE(DegenerateClass);     // background coefficient undefined (C_D >= n)
JEQ_ERROR_TYPE(MetricDegenerate);    // fiber coefficient c(t) <= 0
JEQ_ERROR_TYPE(TailFitFailed);       // no decaying exponential fits the tail
JEQ_ERROR_TYPE(WindowTooShort);      // not enough room for translation windows / tail fit

// Divisor Poisson solve.
JEQ_ERROR_TYPE(SolvabilityViolated); // requested constant is not the class constant

// Cohomology class arithmetic.
JEQ_ERROR_TYPE(DegeneratePairing);      // intersection pairing vanished where a ratio needs it
JEQ_ERROR_TYPE(DegenerateRestriction);  // restricted degree [omega].[D] not positive
JEQ_ERROR_TYPE(ConditionViolated);      // 2 C_D <= C, coefficient b undefined

// Configuration and batch running.
JEQ_ERROR_TYPE(ConfigInvalid);  // scenario parse/validation error, names the field
JEQ_ERROR_TYPE(SolverFailed);   // propagated solver error, recorded in the manifest

#undef JEQ_ERROR_TYPE

}  // namespace jeq
