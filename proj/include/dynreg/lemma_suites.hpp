#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dynreg {

struct LemmaSuiteResult {
  std::string name;
  long instances = 0;
  long failures = 0;
  double worst = 0.0;   // largest violation seen (<= tolerance when passing)
  bool informational = false;
  std::vector<std::string> counterexamples;  // first few failing instances

  bool pass() const { return informational || failures == 0; }
};

struct LemmaReport {
  std::vector<LemmaSuiteResult> suites;
  bool pass() const;
};

/// [G box H]^* = G^* + H^* on random convex pairs (d = 1, 2), plus G box H = [G^* + H^*]_* in d = 1
/// using every pairwise lattice slope as the dual set.  inject_nonconvex replaces G by a double well.
LemmaSuiteResult conjugate_sum_suite(std::uint64_t seed, int instances, bool inject_nonconvex = false);
/// Support-function G of a box B, random finite U inside B on the dual lattice: the set formula,
/// hull invariance (U vs lattice points of conv U) and the closed form support(conv U).
LemmaSuiteResult set_inverse_suite(std::uint64_t seed, int instances);
/// Hull invariance with a strictly convex G, where it is expected to fail; reported only.
LemmaSuiteResult set_inverse_general_g_report();
/// Throws PreconditionError through the oracle; returns a passing line when it does.
LemmaSuiteResult set_inverse_empty_u_guard();
/// x* in dG(x~) and dH(x - x~) implies x* in d(G box H)(x); converse on 1-D instances.
LemmaSuiteResult subdiff_inclusion_suite(std::uint64_t seed, int instances);
/// sqrt(G^2 box H^2) of random polyhedral seminorms passes the seminorm axioms up to lattice error.
LemmaSuiteResult seminorm_suite(std::uint64_t seed, int instances);
/// Data-term lower bound for l = (gamma/2)|.|^2 and A(x) = M x + c (x o x), with gamma (1 - beta)^2
/// in place of gamma.  The second result counts violations of the uncorrected constant.
std::vector<LemmaSuiteResult> data_term_suite(std::uint64_t seed, int instances);

LemmaReport verify_lemmas(std::uint64_t seed = 7, int instances = 100, bool inject_nonconvex = false);
void write_lemma_report(const LemmaReport& report, std::ostream& os);

}  // namespace dynreg
