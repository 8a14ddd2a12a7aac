#pragma once
// Desk-scale numeric reference for the vision-language architecture math:
// patch embedding, multi-axis rotary position encoding, window/global
// attention masking, 2x2 token fusion, and the unified multi-task loss.
// Pure functions, no training loop, no GPU.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surgbench::kernel {

struct KernelConfig {
  int patch_size = 14;            // P
  int window_patches = 8;         // M: 112 px window / 14 px patch
  std::vector<int> full_attention_layers = {7, 15, 23, 31};
  int vision_width = 1280;        // d_v
  int fusion_hidden = 5120;       // m
  int model_width = 3584;         // d_l
  double rope_base = 10000.0;
  int head_dim = 96;              // d_k: even and divisible by 6 (equal tri-section)
  int vocab_size = 151646;        // V

  // Rotation-pair counts for the (t, u, v) sections; defaults to equal thirds
  // of head_dim/2. Must sum to head_dim/2 when overridden.
  std::optional<std::array<int, 3>> rope_sections;
  std::array<int, 3> rope_section_pairs() const;

  void validate() const;  // throws std::invalid_argument

  static KernelConfig desk_scale();  // small widths for tests and selftest
};

struct PositionTriple {
  double t = 0;  // temporal index; real-valued so t can carry timestamps
  int u = 0;     // patch row
  int v = 0;     // patch column
};

// 1D position n maps to the (n, n, n) triple; this is the text-token case
// that reduces the multi-axis rotation to standard 1D RoPE.
PositionTriple text_position(int n);

struct Image {
  int height = 0, width = 0;
  std::vector<double> data;  // row-major, channel-last: data[(y*width + x)*3 + c]

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

struct TokenGrid {
  Eigen::MatrixXd tokens;  // N x d_v
  std::vector<PositionTriple> positions;
  int rows = 0, cols = 0;
};

// z_p = W_e vec(P_p) + b_e over non-overlapping P x P patches, row-major
// positions, t = 0 for an image. vec() flattens the patch row-major with the
// channel fastest. W_e is d_v x (3 P^2). Throws when H or W is not divisible
// by the patch size.
TokenGrid patch_embed(const Image& image, const Eigen::MatrixXd& embed_weight,
                      const Eigen::VectorXd& embed_bias, const KernelConfig& config);

// Applies the multi-axis rotary encoding to a query/key pair. One shared
// frequency table over the full head dim (base^(-2j/d_k) for pair j); the
// pair index space splits into (t, u, v) sections, so t = u = v = n rotates
// every pair by n * theta_j and coincides with standard 1D RoPE. Rotations
// are orthogonal: norms are preserved.
struct RotatedPair {
  std::vector<double> q, k;
};
RotatedPair mrope_apply(std::span<const double> q, std::span<const double> k,
                        const PositionTriple& pos_q, const PositionTriple& pos_k,
                        const KernelConfig& config);

// Reference single-axis rotation used for the reduction property.
std::vector<double> rope_1d(std::span<const double> x, double position,
                            const KernelConfig& config);

struct AttentionMask {
  int n = 0;
  std::vector<std::uint8_t> allowed;  // n*n, row-major

  bool at(int i, int j) const { return allowed[static_cast<std::size_t>(i) * n + j] != 0; }
  std::size_t allowed_pairs() const;
};

// Window attention mask over a rows x cols patch grid: tokens attend within
// their M x M window (row-major tiling, ragged edges keep their truncated
// window); layers in the full-attention set get an all-true mask. The
// allowed-pair count never exceeds N * M^2.
AttentionMask window_mask(int rows, int cols, int window, int layer_index,
                          const KernelConfig& config);

enum class Activation { Silu, Gelu, Relu, Identity };
double apply_activation(Activation a, double x);

// h_i = W2 sigma(W1 x_i + b1) + b2 where x_i concatenates a 2x2 patch block
// (top-left, top-right, bottom-left, bottom-right) into a 4 d_v vector.
// Output: (N/4) x d_l, blocks row-major. Throws on odd grid dimensions.
Eigen::MatrixXd token_fuse(const TokenGrid& grid, const Eigen::MatrixXd& w1,
                           const Eigen::VectorXd& b1, const Eigen::MatrixXd& w2,
                           const Eigen::VectorXd& b2, Activation activation,
                           const KernelConfig& config);

struct SequenceExample {
  Eigen::MatrixXd probabilities;  // L x V, rows on the simplex
  std::vector<int> targets;       // length L, values in [0, V)
};

// Unified autoregressive loss: -sum over examples, sum over positions of
// log p(target). Sum reduction, not mean. Throws on non-simplex rows
// (tolerance 1e-9) or out-of-range targets.
double multitask_loss(std::span<const SequenceExample> batch);

// Score-space composition for the finite-difference gradient check:
// softmax(scores) row-wise, then the same negative log likelihood sum.
double multitask_loss_from_scores(const Eigen::MatrixXd& scores, std::span<const int> targets);
Eigen::MatrixXd multitask_loss_score_grad(const Eigen::MatrixXd& scores,
                                          std::span<const int> targets);

// --- selftest -----------------------------------------------------------------

struct SelftestResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs every kernel invariant at toy widths and returns one row per check.
std::vector<SelftestResult> selftest(std::uint64_t seed);

}  // namespace surgbench::kernel
