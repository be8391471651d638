#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gestformer/autodiff.hpp"
#include "gestformer/tensor.hpp"

namespace gestformer {

inline constexpr double kGradTol = 1e-6;
inline constexpr double kGradStep = 1e-5;

// One named check: the builder binds its own leaves on the tape it is given
// and returns a scalar loss. The harness perturbs the listed tensors for the
// finite-difference side and reads their grad slots for the analytic side.
struct GradCheckCase {
    std::string name;
    std::vector<Tensor*> leaves;
    std::function<Var(Tape&)> build;
};

// Max over all leaf scalars of |analytic - central_fd| / max(|a|, |fd|, 1e-8).
double gradcheck_max_rel_err(const GradCheckCase& c, double h = kGradStep);

struct GradCheckResult {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

// Every differentiable operation plus the composite blocks and the full toy
// model, on seeded random inputs. Shared by the test suite and the CLI.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed);

bool all_pass(const std::vector<GradCheckResult>& results);

} // namespace gestformer
