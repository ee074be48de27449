#pragma once

#include <string>
#include <vector>

#include "geocond/layers.hpp"

namespace geocond::gradcheck {

/// Double-precision reference forward passes, independent of the float32
/// kernels. Used as the finite-difference engine and as naive oracles.
namespace ref {

std::vector<double> conv2d(const std::vector<double>& in, const std::vector<double>& w,
                           const std::vector<double>& bias, int B, int Ci, int H, int W, int Co);
std::vector<double> conv_transpose2d(const std::vector<double>& in, const std::vector<double>& w,
                                     const std::vector<double>& bias, int B, int Ci, int H,
                                     int W, int Co);
std::vector<double> dense(const std::vector<double>& in, const std::vector<double>& w,
                          const std::vector<double>& bias, int B, int F, int G);

/// Walks a sequential network, promoting the stored float32 parameters to
/// double, and returns the final activation values.
std::vector<double> forward_network(const Network& net, std::vector<double> x,
                                    std::vector<int> shape, bool training);

}  // namespace ref

struct CheckResult {
  std::string name;
  double max_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Central finite differences (h = 1e-3, double-precision loss evaluation)
/// against the reverse-mode gradients, for every layer kind and for the
/// composed discriminator(generator(z)) graph, plus the conv / transposed
/// conv adjoint identity (its tolerance is tolerance/10).
std::vector<CheckResult> run_suite(double tolerance = 1e-3);

}  // namespace geocond::gradcheck
