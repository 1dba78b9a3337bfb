#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "textmatch/autodiff.hpp"
#include "textmatch/tensor.hpp"
#include "textmatch/text_pipeline.hpp"

namespace textmatch {

enum class MatchMode { kDot, kCosine, kIndicator };
MatchMode parse_match_mode(std::string_view name);

/// Word-by-word matching matrix between the rows of `left` (n x d) and
/// `right` (m x d). Cosine entries are 0 where either vector is all zero.
/// Indicator mode compares `left_ids` / `right_ids` and ignores the vectors.
Tensor matching_matrix(const Tensor& left, const Tensor& right, MatchMode mode,
                       std::span<const std::int64_t> left_ids = {},
                       std::span<const std::int64_t> right_ids = {});

/// Differentiable dot / cosine matching matrix.
NodeId matching_matrix(Graph& g, NodeId left, NodeId right, MatchMode mode);

enum class HistogramMode { kCount, kNormalized, kLogCount };
HistogramMode parse_histogram_mode(std::string_view name);

/// Bins similarities (clipped to [-1, 1]) into `bins - 1` equal-width
/// intervals over [-1, 1) plus an exact-match bin for 1.
std::vector<double> matching_histogram(std::span<const double> similarities, std::size_t bins,
                                       HistogramMode mode);

/// softmax(X W Y^T) Y, one attended vector per row of X.
NodeId attention(Graph& g, NodeId x, NodeId y, NodeId w);

struct Kernel {
  double mu = 0.0;
  double sigma = 0.1;
};

/// Gaussian kernels with sigma > 0 and non-decreasing mu in [-1, 1].
class KernelBank {
 public:
  explicit KernelBank(std::vector<Kernel> kernels);
  /// `count - 1` soft kernels centred on an even grid over (-1, 1) followed
  /// by the exact-match kernel at mu = 1.
  static KernelBank standard(std::size_t count, double sigma = 0.1, double exact_sigma = 0.001);

  std::size_t size() const { return kernels_.size(); }
  const Kernel& operator[](std::size_t i) const { return kernels_[i]; }
  const std::vector<Kernel>& kernels() const { return kernels_; }

 private:
  std::vector<Kernel> kernels_;
};

inline constexpr double kLogFloor = 1e-10;

/// phi_k = sum_i ln(max(sum_j exp(-(M_ij - mu_k)^2 / (2 sigma_k^2)), 1e-10)),
/// returned as a 1 x |kernels| row. `rows` x `cols` is the matrix extent.
NodeId kernel_pooling(Graph& g, NodeId matrix, std::size_t rows, std::size_t cols,
                      const KernelBank& kernels);
std::vector<double> kernel_pooling(const Tensor& matrix, const KernelBank& kernels);

/// x W + b with the 1 x h bias repeated over the rows of x.
NodeId dense(Graph& g, NodeId x, NodeId weight, NodeId bias, std::size_t rows);

}  // namespace textmatch
