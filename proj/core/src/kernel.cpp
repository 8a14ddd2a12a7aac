#include "surgbench/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace surgbench::kernel {

std::array<int, 3> KernelConfig::rope_section_pairs() const {
  const int pairs = head_dim / 2;
  if (rope_sections) {
    const auto& s = *rope_sections;
    if (s[0] + s[1] + s[2] != pairs || s[0] <= 0 || s[1] <= 0 || s[2] <= 0) {
      throw std::invalid_argument("rope_sections must be positive and sum to head_dim/2");
    }
    return s;
  }
  if (pairs % 3 != 0) {
    throw std::invalid_argument("head_dim must be divisible by 6 for the equal tri-section");
  }
  return {pairs / 3, pairs / 3, pairs / 3};
}

void KernelConfig::validate() const {
  if (patch_size <= 0 || window_patches <= 0 || vision_width <= 0 || fusion_hidden <= 0 ||
      model_width <= 0 || head_dim <= 0 || vocab_size <= 0) {
    throw std::invalid_argument("kernel config: dimensions must be positive");
  }
  if (head_dim % 2 != 0) throw std::invalid_argument("kernel config: head_dim must be even");
  (void)rope_section_pairs();  // validates the tri-section
  if (rope_base <= 1.0) throw std::invalid_argument("kernel config: rope_base must exceed 1");
}

KernelConfig KernelConfig::desk_scale() {
  KernelConfig cfg;
  cfg.vision_width = 12;
  cfg.fusion_hidden = 16;
  cfg.model_width = 10;
  cfg.head_dim = 24;
  cfg.vocab_size = 11;
  return cfg;
}

PositionTriple text_position(int n) { return {static_cast<double>(n), n, n}; }

TokenGrid patch_embed(const Image& image, const Eigen::MatrixXd& embed_weight,
                      const Eigen::VectorXd& embed_bias, const KernelConfig& config) {
  const int p = config.patch_size;
  if (image.height <= 0 || image.width <= 0 || image.height % p != 0 || image.width % p != 0) {
    throw std::invalid_argument("patch_embed: image dimensions must be positive multiples of " +
                                std::to_string(p));
  }
  const int patch_dim = 3 * p * p;
  if (embed_weight.cols() != patch_dim || embed_weight.rows() != embed_bias.size()) {
    throw std::invalid_argument("patch_embed: weight must be d_v x 3P^2 with a matching bias");
  }
  const int rows = image.height / p;
  const int cols = image.width / p;
  const int n = rows * cols;

  TokenGrid grid;
  grid.rows = rows;
  grid.cols = cols;
  grid.tokens.resize(n, embed_weight.rows());
  grid.positions.resize(static_cast<std::size_t>(n));

  Eigen::VectorXd patch(patch_dim);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int idx = 0;
      for (int y = 0; y < p; ++y) {
        for (int x = 0; x < p; ++x) {
          for (int ch = 0; ch < 3; ++ch) {
            patch[idx++] = image.at(r * p + y, c * p + x, ch);
          }
        }
      }
      const int token = r * cols + c;
      grid.tokens.row(token) = (embed_weight * patch + embed_bias).transpose();
      grid.positions[static_cast<std::size_t>(token)] = {0.0, r, c};
    }
  }
  return grid;
}

namespace {

// Rotates pair j of `x` by angle * base^(-2j/d_k); the section layout decides
// which position component supplies the angle for each pair.
std::vector<double> rotate_pairs(std::span<const double> x, const PositionTriple& pos,
                                 const KernelConfig& config) {
  const int d = config.head_dim;
  if (static_cast<int>(x.size()) != d) {
    throw std::invalid_argument("mrope: vector length must equal head_dim");
  }
  const auto sections = config.rope_section_pairs();
  std::vector<double> out(x.begin(), x.end());
  const int pairs = d / 2;
  for (int j = 0; j < pairs; ++j) {
    double position;
    if (j < sections[0]) {
      position = pos.t;
    } else if (j < sections[0] + sections[1]) {
      position = static_cast<double>(pos.u);
    } else {
      position = static_cast<double>(pos.v);
    }
    const double theta = std::pow(config.rope_base, -2.0 * j / d);
    const double angle = position * theta;
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    const double a = out[static_cast<std::size_t>(2 * j)];
    const double b = out[static_cast<std::size_t>(2 * j + 1)];
    out[static_cast<std::size_t>(2 * j)] = a * cs - b * sn;
    out[static_cast<std::size_t>(2 * j + 1)] = a * sn + b * cs;
  }
  return out;
}

}  // namespace

RotatedPair mrope_apply(std::span<const double> q, std::span<const double> k,
                        const PositionTriple& pos_q, const PositionTriple& pos_k,
                        const KernelConfig& config) {
  RotatedPair out;
  out.q = rotate_pairs(q, pos_q, config);
  out.k = rotate_pairs(k, pos_k, config);
  return out;
}

std::vector<double> rope_1d(std::span<const double> x, double position,
                            const KernelConfig& config) {
  const int d = static_cast<int>(x.size());
  std::vector<double> out(x.begin(), x.end());
  for (int j = 0; j < d / 2; ++j) {
    const double theta = std::pow(config.rope_base, -2.0 * j / d);
    const double angle = position * theta;
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    const double a = out[static_cast<std::size_t>(2 * j)];
    const double b = out[static_cast<std::size_t>(2 * j + 1)];
    out[static_cast<std::size_t>(2 * j)] = a * cs - b * sn;
    out[static_cast<std::size_t>(2 * j + 1)] = a * sn + b * cs;
  }
  return out;
}

std::size_t AttentionMask::allowed_pairs() const {
  std::size_t count = 0;
  for (const auto v : allowed) count += v != 0;
  return count;
}

AttentionMask window_mask(int rows, int cols, int window, int layer_index,
                          const KernelConfig& config) {
  if (rows <= 0 || cols <= 0 || window <= 0) {
    throw std::invalid_argument("window_mask: rows, cols, window must be positive");
  }
  const int n = rows * cols;
  AttentionMask mask;
  mask.n = n;
  mask.allowed.assign(static_cast<std::size_t>(n) * n, 0);

  const bool full = std::find(config.full_attention_layers.begin(),
                              config.full_attention_layers.end(),
                              layer_index) != config.full_attention_layers.end();
  if (full) {
    std::fill(mask.allowed.begin(), mask.allowed.end(), 1);
    return mask;
  }
  // Same M x M window (row-major tiling, ragged edges allowed).
  auto window_of = [&](int token) {
    const int r = token / cols;
    const int c = token % cols;
    return std::pair<int, int>{r / window, c / window};
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (window_of(i) == window_of(j)) {
        mask.allowed[static_cast<std::size_t>(i) * n + j] = 1;
      }
    }
  }
  return mask;
}

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::Silu: return x / (1.0 + std::exp(-x));
    case Activation::Gelu: return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
    case Activation::Relu: return x > 0 ? x : 0.0;
    case Activation::Identity: return x;
  }
  return x;
}

Eigen::MatrixXd token_fuse(const TokenGrid& grid, const Eigen::MatrixXd& w1,
                           const Eigen::VectorXd& b1, const Eigen::MatrixXd& w2,
                           const Eigen::VectorXd& b2, Activation activation,
                           const KernelConfig& config) {
  (void)config;
  if (grid.rows % 2 != 0 || grid.cols % 2 != 0) {
    throw std::invalid_argument("token_fuse: grid rows and cols must be even");
  }
  const auto d_v = grid.tokens.cols();
  if (w1.cols() != 4 * d_v || w1.rows() != b1.size() || w2.cols() != w1.rows() ||
      w2.rows() != b2.size()) {
    throw std::invalid_argument("token_fuse: weight shapes do not chain (4*d_v -> m -> d_l)");
  }
  const int out_rows = grid.rows / 2;
  const int out_cols = grid.cols / 2;
  Eigen::MatrixXd fused(out_rows * out_cols, w2.rows());
  Eigen::VectorXd x(4 * d_v);
  for (int r = 0; r < out_rows; ++r) {
    for (int c = 0; c < out_cols; ++c) {
      const int tl = (2 * r) * grid.cols + 2 * c;
      const int tr = tl + 1;
      const int bl = (2 * r + 1) * grid.cols + 2 * c;
      const int br = bl + 1;
      x.segment(0, d_v) = grid.tokens.row(tl).transpose();
      x.segment(d_v, d_v) = grid.tokens.row(tr).transpose();
      x.segment(2 * d_v, d_v) = grid.tokens.row(bl).transpose();
      x.segment(3 * d_v, d_v) = grid.tokens.row(br).transpose();
      Eigen::VectorXd hidden = w1 * x + b1;
      for (Eigen::Index i = 0; i < hidden.size(); ++i) {
        hidden[i] = apply_activation(activation, hidden[i]);
      }
      fused.row(r * out_cols + c) = (w2 * hidden + b2).transpose();
    }
  }
  return fused;
}

double multitask_loss(std::span<const SequenceExample> batch) {
  double total = 0.0;
  for (const auto& example : batch) {
    const auto& p = example.probabilities;
    if (static_cast<std::size_t>(p.rows()) != example.targets.size()) {
      throw std::invalid_argument("multitask_loss: targets must match row count");
    }
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double row_sum = p.row(i).sum();
      if (std::abs(row_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("multitask_loss: row " + std::to_string(i) +
                                    " is not on the simplex (sum " + std::to_string(row_sum) + ")");
      }
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (p(i, j) < 0.0) {
          throw std::invalid_argument("multitask_loss: negative probability");
        }
      }
      const int target = example.targets[static_cast<std::size_t>(i)];
      if (target < 0 || target >= p.cols()) {
        throw std::invalid_argument("multitask_loss: target out of range");
      }
      total -= std::log(p(i, target));
    }
  }
  return total;
}

double multitask_loss_from_scores(const Eigen::MatrixXd& scores, std::span<const int> targets) {
  if (static_cast<std::size_t>(scores.rows()) != targets.size()) {
    throw std::invalid_argument("multitask_loss_from_scores: targets must match row count");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double max_score = scores.row(i).maxCoeff();
    double z = 0.0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      z += std::exp(scores(i, j) - max_score);
    }
    const int target = targets[static_cast<std::size_t>(i)];
    if (target < 0 || target >= scores.cols()) {
      throw std::invalid_argument("multitask_loss_from_scores: target out of range");
    }
    total -= scores(i, target) - max_score - std::log(z);
  }
  return total;
}

Eigen::MatrixXd multitask_loss_score_grad(const Eigen::MatrixXd& scores,
                                          std::span<const int> targets) {
  Eigen::MatrixXd grad(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double max_score = scores.row(i).maxCoeff();
    double z = 0.0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      z += std::exp(scores(i, j) - max_score);
    }
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      grad(i, j) = std::exp(scores(i, j) - max_score) / z;
    }
    grad(i, targets[static_cast<std::size_t>(i)]) -= 1.0;
  }
  return grad;
}

// --- selftest --------------------------------------------------------------------

namespace {

struct Check {
  std::vector<SelftestResult>& results;
  void operator()(const std::string& name, bool pass, const std::string& detail) const {
    results.push_back({name, pass, detail});
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

std::vector<SelftestResult> selftest(std::uint64_t seed) {
  std::vector<SelftestResult> results;
  Check check{results};
  KernelConfig cfg = KernelConfig::desk_scale();
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_vec = [&](int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = unit(rng);
    return v;
  };

  // 1D reduction: (n, n, n) positions equal single-axis rotation.
  {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto q = random_vec(cfg.head_dim);
      const auto k = random_vec(cfg.head_dim);
      const int n = static_cast<int>(rng() % 512);
      const auto rotated = mrope_apply(q, k, text_position(n), text_position(n), cfg);
      const auto ref = rope_1d(q, n, cfg);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        worst = std::max(worst, std::abs(ref[i] - rotated.q[i]));
      }
    }
    check("mrope_1d_reduction", worst < 1e-9, "max abs diff " + fmt(worst));
  }

  // Norm preservation.
  {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto q = random_vec(cfg.head_dim);
      const auto k = random_vec(cfg.head_dim);
      const PositionTriple pq{static_cast<double>(rng() % 100), static_cast<int>(rng() % 64),
                              static_cast<int>(rng() % 64)};
      const PositionTriple pk{static_cast<double>(rng() % 100), static_cast<int>(rng() % 64),
                              static_cast<int>(rng() % 64)};
      const auto rotated = mrope_apply(q, k, pq, pk, cfg);
      auto norm = [](std::span<const double> v) {
        double s = 0;
        for (const double x : v) s += x * x;
        return std::sqrt(s);
      };
      worst = std::max(worst, std::abs(norm(q) - norm(rotated.q)));
      worst = std::max(worst, std::abs(norm(k) - norm(rotated.k)));
    }
    check("mrope_norm_preservation", worst < 1e-12, "max abs norm drift " + fmt(worst));
  }

  // Relative-position property: q'(a).k'(b) depends only on a-b.
  {
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const auto q = random_vec(cfg.head_dim);
      const auto k = random_vec(cfg.head_dim);
      const PositionTriple a{static_cast<double>(rng() % 50), static_cast<int>(rng() % 32),
                             static_cast<int>(rng() % 32)};
      const PositionTriple b{static_cast<double>(rng() % 50), static_cast<int>(rng() % 32),
                             static_cast<int>(rng() % 32)};
      const PositionTriple shift{static_cast<double>(rng() % 25), static_cast<int>(rng() % 16),
                                 static_cast<int>(rng() % 16)};
      auto dot = [](const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
        return s;
      };
      const auto base = mrope_apply(q, k, a, b, cfg);
      const PositionTriple a2{a.t + shift.t, a.u + shift.u, a.v + shift.v};
      const PositionTriple b2{b.t + shift.t, b.u + shift.u, b.v + shift.v};
      const auto shifted = mrope_apply(q, k, a2, b2, cfg);
      worst = std::max(worst, std::abs(dot(base.q, base.k) - dot(shifted.q, shifted.k)));
    }
    check("mrope_relative_positions", worst < 1e-9, "max abs dot drift " + fmt(worst));
  }

  // Window mask pair bound, with equality when M divides both dims.
  {
    const auto mask = window_mask(4, 4, 2, 0, cfg);
    const bool exact = mask.allowed_pairs() == 4ull * 4 * 2 * 2;  // N * M^2
    const auto ragged = window_mask(5, 3, 2, 0, cfg);
    const bool bounded = ragged.allowed_pairs() <= 15ull * 4;
    const auto full = window_mask(4, 4, 2, cfg.full_attention_layers.front(), cfg);
    const bool all_true = full.allowed_pairs() == 16ull * 16;
    check("window_mask_pair_bound", exact && bounded && all_true,
          "4x4/M=2 pairs " + std::to_string(mask.allowed_pairs()) + ", ragged " +
              std::to_string(ragged.allowed_pairs()));
  }

  // Token fusion 4x reduction.
  {
    TokenGrid grid;
    grid.rows = 4;
    grid.cols = 4;
    grid.tokens = Eigen::MatrixXd::Random(16, cfg.vision_width);
    grid.positions.assign(16, {});
    const Eigen::MatrixXd w1 = Eigen::MatrixXd::Random(cfg.fusion_hidden, 4 * cfg.vision_width);
    const Eigen::VectorXd b1 = Eigen::VectorXd::Random(cfg.fusion_hidden);
    const Eigen::MatrixXd w2 = Eigen::MatrixXd::Random(cfg.model_width, cfg.fusion_hidden);
    const Eigen::VectorXd b2 = Eigen::VectorXd::Random(cfg.model_width);
    const auto fused = token_fuse(grid, w1, b1, w2, b2, Activation::Silu, cfg);
    check("token_fuse_4x_reduction", fused.rows() == 4 && fused.cols() == cfg.model_width,
          std::to_string(fused.rows()) + " fused tokens from 16");
  }

  // Uniform-loss identity: L * ln V per example.
  {
    const int L = 5;
    const int V = cfg.vocab_size;
    SequenceExample ex;
    ex.probabilities = Eigen::MatrixXd::Constant(L, V, 1.0 / V);
    ex.targets = {0, 3, 7, 1, 9};
    const double loss = multitask_loss(std::span<const SequenceExample>(&ex, 1));
    const double expected = L * std::log(static_cast<double>(V));
    check("multitask_loss_uniform", std::abs(loss - expected) < 1e-9,
          "loss " + fmt(loss) + " expected " + fmt(expected));
  }

  // Finite-difference gradient check for the score-to-loss composition.
  {
    const int L = 4, V = 7;
    Eigen::MatrixXd scores(L, V);
    for (Eigen::Index i = 0; i < L; ++i) {
      for (Eigen::Index j = 0; j < V; ++j) scores(i, j) = unit(rng);
    }
    std::vector<int> targets = {1, 0, 6, 3};
    const auto grad = multitask_loss_score_grad(scores, targets);
    const double eps = 1e-6;
    double worst_rel = 0.0;
    for (Eigen::Index i = 0; i < L; ++i) {
      for (Eigen::Index j = 0; j < V; ++j) {
        Eigen::MatrixXd plus = scores, minus = scores;
        plus(i, j) += eps;
        minus(i, j) -= eps;
        const double fd = (multitask_loss_from_scores(plus, targets) -
                           multitask_loss_from_scores(minus, targets)) /
                          (2 * eps);
        const double denom = std::max(1e-8, std::abs(fd));
        worst_rel = std::max(worst_rel, std::abs(fd - grad(i, j)) / denom);
      }
    }
    check("loss_gradient_finite_difference", worst_rel < 1e-5, "max rel err " + fmt(worst_rel));
  }

  return results;
}

}  // namespace surgbench::kernel
