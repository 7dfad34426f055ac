#include "jeq/classes.hpp"

#include <string>

namespace jeq {

namespace {

std::string num(const Rational& r) {
  std::string s = std::to_string(r.numerator());
  if (r.denominator() != 1) s += "/" + std::to_string(r.denominator());
  return s;
}

void check_vector(const std::vector<Rational>& v, std::size_t rank, const char* name) {
  if (v.size() != rank)
    throw ConfigInvalid("surface classes: " + std::string(name) + " has " +
                        std::to_string(v.size()) + " coordinates, expected rank " +
                        std::to_string(rank));
}

}  // namespace

void SurfaceClassData::validate() const {
  if (rank == 0) throw ConfigInvalid("surface classes: rank must be positive");
  if (Q.size() != rank * rank)
    throw ConfigInvalid("surface classes: pairing has " + std::to_string(Q.size()) +
                        " entries, expected rank^2 = " + std::to_string(rank * rank));
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = i + 1; j < rank; ++j)
      if (Q[i * rank + j] != Q[j * rank + i])
        throw ConfigInvalid("surface classes: pairing not symmetric at (" +
                            std::to_string(i) + "," + std::to_string(j) + "): " +
                            num(Q[i * rank + j]) + " vs " + num(Q[j * rank + i]));
  check_vector(omega, rank, "[omega]");
  check_vector(chi, rank, "[chi]");
  if (!divisor.empty()) check_vector(divisor, rank, "[D]");
  if (canonical) check_vector(*canonical, rank, "K_X");
  if (pair(omega, omega) <= Rational(0))
    throw ConfigInvalid("surface classes: [omega].[omega] = " + num(pair(omega, omega)) +
                        " must be positive for a Kähler class");
}

Rational SurfaceClassData::pair(const std::vector<Rational>& u,
                                const std::vector<Rational>& v) const {
  if (u.size() != rank || v.size() != rank)
    throw ConfigInvalid("surface classes: pairing operand size mismatch (" +
                        std::to_string(u.size()) + ", " + std::to_string(v.size()) +
                        ") against rank " + std::to_string(rank));
  Rational acc(0);
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = 0; j < rank; ++j) acc += u[i] * Q[i * rank + j] * v[j];
  return acc;
}

Rational j_constant(const SurfaceClassData& data) {
  data.validate();
  const Rational mixed = data.pair(data.omega, data.chi);
  if (mixed == Rational(0))
    throw DegeneratePairing("j constant: [omega].[chi] = 0, the volume ratio "
                            "is undefined");
  return data.pair(data.omega, data.omega) / mixed;
}

DonaldsonReport donaldson_check(const SurfaceClassData& data) {
  DonaldsonReport rep;
  rep.C = j_constant(data);  // validates
  rep.alpha.resize(data.rank);
  for (std::size_t i = 0; i < data.rank; ++i)
    rep.alpha[i] = Rational(2) * data.omega[i] - rep.C * data.chi[i];
  rep.alpha_sq = data.pair(rep.alpha, rep.alpha);
  rep.alpha_omega = data.pair(rep.alpha, data.omega);
  rep.assumed_no_negative_curves = data.no_negative_curves;
  const bool positive = rep.alpha_sq > Rational(0) && rep.alpha_omega > Rational(0);
  rep.verdict = (positive && data.no_negative_curves) ? Verdict::Kahler
                                                      : Verdict::Inconclusive;
  return rep;
}

RestrictedConstant restricted_constant_CD(const SurfaceClassData& data,
                                          bool strict_subsolution) {
  data.validate();
  if (data.divisor.empty())
    throw ConfigInvalid("restricted constant: no divisor class tracked");
  const Rational deg_omega = data.pair(data.omega, data.divisor);
  if (deg_omega <= Rational(0))
    throw DegenerateRestriction("restricted constant: [omega].[D] = " + num(deg_omega) +
                                " must be positive");
  RestrictedConstant out;
  out.value = data.pair(data.chi, data.divisor) / deg_omega;
  if (strict_subsolution) {
    out.shape_checked = true;
    out.shape_ok = Rational(2) - out.value > Rational(0);
  }
  return out;
}

Rational coefficient_b(const Rational& a, const Rational& C, const Rational& C_D) {
  if (a <= Rational(0))
    throw ConfigInvalid("coefficient b: a = " + num(a) + " must be positive");
  if (C <= Rational(0))
    throw ConfigInvalid("coefficient b: C = " + num(C) + " must be positive");
  if (C_D <= Rational(0))
    throw ConfigInvalid("coefficient b: C_D = " + num(C_D) + " must be positive");
  if (Rational(2) * C_D <= C)
    throw ConditionViolated("coefficient b: need 2 C_D > C, got 2*" + num(C_D) +
                            " <= " + num(C));
  return a / (Rational(2) / C - Rational(1) / C_D);
}

}  // namespace jeq
