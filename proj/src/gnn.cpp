#include "reopt/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "reopt/rng.hpp"

namespace reopt {

using nlohmann::json;

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kClampEps = 1e-12;

enum StreamField : std::uint32_t { kInitField = 101, kShuffleField = 102 };

struct GraphAdjacency {
  std::array<Adjacency, kRelations> in, out;
  explicit GraphAdjacency(const FeatureGraph& g) {
    for (int r = 0; r < kRelations; ++r) {
      const auto& info = relation_info(r);
      in[r] = build_adjacency(g.edges[r].src, g.edges[r].dst, g.num_nodes(info.target));
      out[r] = build_adjacency(g.edges[r].dst, g.edges[r].src, g.num_nodes(info.source));
    }
  }
};

struct BlockCache {
  std::array<Matrix, kNodeTypes> in, xhat, pre;
  std::array<std::vector<double>, kNodeTypes> inv_std;
  std::array<Matrix, kRelations> agg;
};

struct Cache {
  std::vector<BlockCache> blocks;
  Matrix H, Z1, A1;
  std::vector<double> p;
};

void check_shapes(const GnnParams& params, const FeatureGraph& g) {
  if (static_cast<int>(params.blocks.size()) != params.head_b2() + 1)
    throw SpecificationError("parameter block count does not match the configuration");
  for (int k = 0; k < kNodeTypes; ++k) {
    if (g.features[k].cols != kFeatureWidth[k]) throw SpecificationError("feature width mismatch");
    if (params.blocks[GnnParams::proj_w(k)].cols != kFeatureWidth[k])
      throw SpecificationError("projection width does not match the graph");
  }
  if (g.target_rows.size() != static_cast<std::size_t>(g.N) * g.M * g.tau)
    throw SpecificationError("target mask size must be N*M*tau");
}

void add_rows(Matrix& dst, const Matrix& src, const Adjacency& in) {
  for (int d = 0; d < dst.rows; ++d) {
    if (in.degree(d) == 0) continue;
    double* a = dst.row(d);
    const double* m = src.row(d);
    for (int c = 0; c < dst.cols; ++c) a[c] += m[c];
  }
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

std::vector<double> run_forward(const GnnParams& P, const FeatureGraph& g, const GraphAdjacency& adj, Exec ex,
                                Cache* cache) {
  check_shapes(P, g);
  const int D = P.config.delta;
  std::array<Matrix, kNodeTypes> h;
  for (int k = 0; k < kNodeTypes; ++k)
    linear_forward(g.features[k], P.blocks[GnnParams::proj_w(k)], P.blocks[GnnParams::proj_b(k)], h[k], ex);

  if (cache) cache->blocks.resize(P.config.nu);
  for (int l = 0; l < P.config.nu; ++l) {
    std::array<Matrix, kNodeTypes> a;
    for (int k = 0; k < kNodeTypes; ++k)
      linear_forward(h[k], P.blocks[GnnParams::self_w(l, k)], P.blocks[GnnParams::self_b(l, k)], a[k], ex);
    std::array<Matrix, kRelations> agg;
    for (int r = 0; r < kRelations; ++r) {
      const auto& info = relation_info(r);
      mean_aggregate(adj.in[r], h[static_cast<int>(info.source)], agg[r], ex);
      Matrix msg;
      linear_forward(agg[r], P.blocks[GnnParams::msg_w(l, r)], P.blocks[GnnParams::msg_b(l, r)], msg, ex);
      add_rows(a[static_cast<int>(info.target)], msg, adj.in[r]);
    }
    std::array<Matrix, kNodeTypes> next, xhat, pre;
    std::array<std::vector<double>, kNodeTypes> inv_std;
    for (int k = 0; k < kNodeTypes; ++k) {
      const auto& gamma = P.blocks[GnnParams::ln_gamma(l, k)].v;
      const auto& beta = P.blocks[GnnParams::ln_beta(l, k)].v;
      const int n = a[k].rows;
      xhat[k] = Matrix(n, D);
      pre[k] = Matrix(n, D);
      next[k] = Matrix(n, D);
      inv_std[k].resize(n);
      for (int v = 0; v < n; ++v) {
        const double* av = a[k].row(v);
        double mu = 0.0;
        for (int c = 0; c < D; ++c) mu += av[c];
        mu /= D;
        double var = 0.0;
        for (int c = 0; c < D; ++c) var += (av[c] - mu) * (av[c] - mu);
        var /= D;
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        inv_std[k][v] = inv;
        for (int c = 0; c < D; ++c) {
          const double xh = (av[c] - mu) * inv;
          xhat[k](v, c) = xh;
          const double z = gamma[c] * xh + beta[c] + h[k](v, c);
          pre[k](v, c) = z;
          next[k](v, c) = z > 0.0 ? z : 0.0;
        }
      }
    }
    if (cache) {
      auto& bc = cache->blocks[l];
      bc.in = std::move(h);
      bc.agg = std::move(agg);
      bc.xhat = std::move(xhat);
      bc.pre = std::move(pre);
      bc.inv_std = std::move(inv_std);
    }
    h = std::move(next);
  }

  const int nt = static_cast<int>(g.target_rows.size());
  Matrix H(nt, D);
  for (int q = 0; q < nt; ++q) std::copy_n(h[2].row(g.target_rows[q]), D, H.row(q));
  Matrix Z1, logit;
  linear_forward(H, P.blocks[P.head_w1()], P.blocks[P.head_b1()], Z1, ex);
  Matrix A1 = Z1;
  for (double& v : A1.v) v = v > 0.0 ? v : 0.0;
  linear_forward(A1, P.blocks[P.head_w2()], P.blocks[P.head_b2()], logit, ex);
  std::vector<double> p(nt);
  for (int q = 0; q < nt; ++q) p[q] = sigmoid(logit.v[q]);
  if (cache) {
    cache->H = std::move(H);
    cache->Z1 = std::move(Z1);
    cache->A1 = std::move(A1);
    cache->p = p;
  }
  return p;
}

}  // namespace

void GnnConfig::validate() const {
  if (delta < 1 || nu < 1) throw SpecificationError("GNN config needs delta >= 1 and nu >= 1");
}

void TrainConfig::validate() const {
  if (!(rho > 0.0)) throw SpecificationError("learning rate must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw SpecificationError("focal alpha must lie in [0, 1]");
  if (!(gamma >= 0.0)) throw SpecificationError("focal gamma must be >= 0");
  if (epochs < 0) throw SpecificationError("epochs must be >= 0");
  if (!(clip_norm > 0.0)) throw SpecificationError("clip norm must be positive");
}

std::string GnnParams::block_name(int b) const {
  static const char* types[] = {"mp", "ip", "pr"};
  if (b < 6) return std::string("proj_") + (b % 2 ? "b_" : "W_") + types[b / 2];
  if (b >= head_w1()) {
    static const char* head[] = {"head_W1", "head_b1", "head_W2", "head_b2"};
    return head[b - head_w1()];
  }
  const int l = (b - 6) / kPerBlock, o = (b - 6) % kPerBlock;
  std::ostringstream os;
  os << "block" << l << '_';
  if (o < 2 * kRelations) {
    os << (o % 2 ? "msg_b_" : "msg_W_") << relation_info(o / 2).name;
  } else if (o < 2 * kRelations + 2 * kNodeTypes) {
    const int q = o - 2 * kRelations;
    os << (q % 2 ? "self_b_" : "self_W_") << types[q / 2];
  } else {
    const int q = o - 2 * kRelations - 2 * kNodeTypes;
    os << (q % 2 ? "ln_beta_" : "ln_gamma_") << types[q / 2];
  }
  return os.str();
}

long GnnParams::parameter_count() const {
  long n = 0;
  for (const auto& b : blocks) n += static_cast<long>(b.size());
  return n;
}

GnnParams GnnParams::zeros_like() const {
  GnnParams z;
  z.config = config;
  z.blocks.reserve(blocks.size());
  for (const auto& b : blocks) z.blocks.emplace_back(b.rows, b.cols);
  return z;
}

long expected_parameter_count(const GnnConfig& c) {
  const long d = c.delta;
  long inputs = 0;
  for (int w : kFeatureWidth) inputs += w;
  const long proj = d * inputs + kNodeTypes * d;
  const long block = kRelations * (d * d + d) + kNodeTypes * (d * d + d) + kNodeTypes * 2 * d;
  const long head = d * d + d + d + 1;
  return proj + c.nu * block + head;
}

GnnParams init_params(const GnnConfig& config, std::uint64_t seed) {
  config.validate();
  GnnParams P;
  P.config = config;
  const int D = config.delta;
  P.blocks.resize(6 + config.nu * GnnParams::kPerBlock + 4);
  const CounterRng rng(seed, make_stream(kInitField));
  std::uint64_t counter = 0;
  auto glorot = [&](int rows, int cols) {
    Matrix w(rows, cols);
    const double a = std::sqrt(6.0 / (rows + cols));
    for (double& v : w.v) v = rng.uniform(counter++, -a, a);
    return w;
  };
  for (int k = 0; k < kNodeTypes; ++k) {
    P.blocks[GnnParams::proj_w(k)] = glorot(D, kFeatureWidth[k]);
    P.blocks[GnnParams::proj_b(k)] = Matrix(1, D);
  }
  for (int l = 0; l < config.nu; ++l) {
    for (int r = 0; r < kRelations; ++r) {
      P.blocks[GnnParams::msg_w(l, r)] = glorot(D, D);
      P.blocks[GnnParams::msg_b(l, r)] = Matrix(1, D);
    }
    for (int k = 0; k < kNodeTypes; ++k) {
      P.blocks[GnnParams::self_w(l, k)] = glorot(D, D);
      P.blocks[GnnParams::self_b(l, k)] = Matrix(1, D);
      P.blocks[GnnParams::ln_gamma(l, k)] = Matrix(1, D, 1.0);
      P.blocks[GnnParams::ln_beta(l, k)] = Matrix(1, D);
    }
  }
  P.blocks[P.head_w1()] = glorot(D, D);
  P.blocks[P.head_b1()] = Matrix(1, D);
  P.blocks[P.head_w2()] = glorot(1, D);
  P.blocks[P.head_b2()] = Matrix(1, 1);
  return P;
}

std::vector<double> forward(const GnnParams& params, const FeatureGraph& graph, Exec ex) {
  const GraphAdjacency adj(graph);
  return run_forward(params, graph, adj, ex, nullptr);
}

double focal_loss(const std::vector<double>& p, const std::vector<std::uint8_t>& y, double alpha, double gamma) {
  if (p.size() != y.size()) throw SpecificationError("scores and labels differ in length");
  if (p.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double q = std::clamp(p[k], kClampEps, 1.0 - kClampEps);
    if (y[k])
      sum -= alpha * std::pow(1.0 - q, gamma) * std::log(q);
    else
      sum -= (1.0 - alpha) * std::pow(q, gamma) * std::log(1.0 - q);
  }
  return sum / static_cast<double>(p.size());
}

double focal_loss_logit_grad(double p, int y, double alpha, double gamma) {
  const double q = std::clamp(p, kClampEps, 1.0 - kClampEps);
  if (y) return alpha * (gamma * q * std::pow(1.0 - q, gamma) * std::log(q) - std::pow(1.0 - q, gamma + 1.0));
  return (1.0 - alpha) * (std::pow(q, gamma + 1.0) - gamma * std::pow(q, gamma) * (1.0 - q) * std::log(1.0 - q));
}

LossAndGrad loss_and_gradients(const GnnParams& P, const FeatureGraph& g, const std::vector<std::uint8_t>& labels,
                               double alpha, double gamma, Exec ex) {
  if (labels.size() != g.target_rows.size()) throw SpecificationError("labels must cover the target mask");
  const GraphAdjacency adj(g);
  Cache cache;
  LossAndGrad out;
  out.scores = run_forward(P, g, adj, ex, &cache);
  out.loss = focal_loss(out.scores, labels, alpha, gamma);
  out.grad = P.zeros_like();
  auto& G = out.grad.blocks;
  const int D = P.config.delta;
  const int nt = static_cast<int>(labels.size());

  Matrix dlogit(nt, 1);
  for (int q = 0; q < nt; ++q)
    dlogit.v[q] = focal_loss_logit_grad(out.scores[q], labels[q], alpha, gamma) / static_cast<double>(nt);
  linear_backward_params(dlogit, cache.A1, G[P.head_w2()], G[P.head_b2()], ex);
  Matrix dZ1(nt, D);
  linear_backward_input(dlogit, P.blocks[P.head_w2()], dZ1, ex);
  for (std::size_t k = 0; k < dZ1.v.size(); ++k)
    if (cache.Z1.v[k] <= 0.0) dZ1.v[k] = 0.0;
  linear_backward_params(dZ1, cache.H, G[P.head_w1()], G[P.head_b1()], ex);
  Matrix dH(nt, D);
  linear_backward_input(dZ1, P.blocks[P.head_w1()], dH, ex);

  std::array<Matrix, kNodeTypes> dh;
  for (int k = 0; k < kNodeTypes; ++k) dh[k] = Matrix(g.features[k].rows, D);
  for (int q = 0; q < nt; ++q) {
    double* d = dh[2].row(g.target_rows[q]);
    const double* s = dH.row(q);
    for (int c = 0; c < D; ++c) d[c] += s[c];
  }

  for (int l = P.config.nu - 1; l >= 0; --l) {
    const auto& bc = cache.blocks[l];
    std::array<Matrix, kNodeTypes> da, din;
    for (int k = 0; k < kNodeTypes; ++k) {
      const int n = dh[k].rows;
      const auto& gam = P.blocks[GnnParams::ln_gamma(l, k)].v;
      auto& dgam = G[GnnParams::ln_gamma(l, k)].v;
      auto& dbet = G[GnnParams::ln_beta(l, k)].v;
      da[k] = Matrix(n, D);
      din[k] = Matrix(n, D);
      std::vector<double> dxh(D);
      for (int v = 0; v < n; ++v) {
        double s1 = 0.0, s2 = 0.0;
        for (int c = 0; c < D; ++c) {
          const double dp = bc.pre[k](v, c) > 0.0 ? dh[k](v, c) : 0.0;
          din[k](v, c) = dp;
          dgam[c] += dp * bc.xhat[k](v, c);
          dbet[c] += dp;
          dxh[c] = dp * gam[c];
          s1 += dxh[c];
          s2 += dxh[c] * bc.xhat[k](v, c);
        }
        const double inv = bc.inv_std[k][v];
        for (int c = 0; c < D; ++c) da[k](v, c) = inv / D * (D * dxh[c] - s1 - bc.xhat[k](v, c) * s2);
      }
      linear_backward_params(da[k], bc.in[k], G[GnnParams::self_w(l, k)], G[GnnParams::self_b(l, k)], ex);
      linear_backward_input(da[k], P.blocks[GnnParams::self_w(l, k)], din[k], ex);
    }
    for (int r = 0; r < kRelations; ++r) {
      const auto& info = relation_info(r);
      const int tk = static_cast<int>(info.target), sk = static_cast<int>(info.source);
      Matrix dm = da[tk];
      for (int d = 0; d < dm.rows; ++d)
        if (adj.in[r].degree(d) == 0) std::fill(dm.row(d), dm.row(d) + D, 0.0);
      linear_backward_params(dm, bc.agg[r], G[GnnParams::msg_w(l, r)], G[GnnParams::msg_b(l, r)], ex);
      Matrix dagg(dm.rows, D);
      linear_backward_input(dm, P.blocks[GnnParams::msg_w(l, r)], dagg, ex);
      mean_aggregate_backward(adj.in[r], adj.out[r], dagg, din[sk], ex);
    }
    dh = std::move(din);
  }
  for (int k = 0; k < kNodeTypes; ++k)
    linear_backward_params(dh[k], g.features[k], G[GnnParams::proj_w(k)], G[GnnParams::proj_b(k)], ex);
  return out;
}

Metrics metrics_from_counts(long tp, long fp, long tn, long fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / (tp + fp);
  else m.precision_undefined = true;
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
  else m.recall_undefined = true;
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else m.f1_undefined = true;
  return m;
}

namespace {

std::vector<int> top_k(const std::vector<double>& scores, int k) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::clamp(k, 0, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

void count(const std::vector<std::uint8_t>& labels, const std::vector<char>& positive, long& tp, long& fp, long& tn,
           long& fn) {
  for (std::size_t q = 0; q < labels.size(); ++q) {
    if (positive[q]) (labels[q] ? tp : fp)++;
    else (labels[q] ? fn : tn)++;
  }
}

}  // namespace

Metrics classification_metrics(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels, int k) {
  if (scores.size() != labels.size()) throw SpecificationError("scores and labels differ in length");
  if (k < 1) throw SpecificationError("k must be >= 1");
  std::vector<char> pos(scores.size(), 0);
  for (int q : top_k(scores, k)) pos[q] = 1;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  count(labels, pos, tp, fp, tn, fn);
  return metrics_from_counts(tp, fp, tn, fn);
}

Metrics threshold_metrics(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                          double threshold) {
  if (scores.size() != labels.size()) throw SpecificationError("scores and labels differ in length");
  std::vector<char> pos(scores.size());
  for (std::size_t q = 0; q < scores.size(); ++q) pos[q] = scores[q] >= threshold;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  count(labels, pos, tp, fp, tn, fn);
  return metrics_from_counts(tp, fp, tn, fn);
}

std::vector<IndexTriple> select_free_set(const std::vector<double>& scores, int N, int M, int tau, int lambda) {
  const int total = N * M * tau;
  if (static_cast<int>(scores.size()) != total) throw SpecificationError("score vector must have N*M*tau entries");
  if (lambda < 0 || lambda > total) throw SpecificationError("lambda must satisfy 0 <= lambda <= N*M*tau");
  std::vector<int> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [&](int s) {
    const int t = s % tau, j = (s / tau) % M, i = s / (tau * M);
    return std::array<int, 3>{t, j, i};
  };
  std::partial_sort(idx.begin(), idx.begin() + lambda, idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return key(a) < key(b);
  });
  std::vector<IndexTriple> out;
  out.reserve(lambda);
  for (int q = 0; q < lambda; ++q) {
    const int s = idx[q];
    out.push_back({s / (tau * M), (s / tau) % M, s % tau});
  }
  std::sort(out.begin(), out.end());
  return out;
}

Metrics evaluate(const GnnParams& params, const std::vector<Sample>& samples, int k, Exec ex) {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& s : samples) {
    const auto m = classification_metrics(forward(params, *s.graph, ex), *s.labels, k);
    tp += m.tp;
    fp += m.fp;
    tn += m.tn;
    fn += m.fn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& validation, const TrainConfig& tc,
                  const GnnConfig& gc, int eval_k, Exec ex) {
  tc.validate();
  gc.validate();
  if (train_set.empty()) throw SpecificationError("training set is empty");
  TrainResult res;
  res.params = init_params(gc, tc.seed);
  auto& P = res.params;
  GnnParams m1 = P.zeros_like(), m2 = P.zeros_like();
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;
  const CounterRng rng(tc.seed, make_stream(kShuffleField));
  std::uint64_t counter = 0;
  std::vector<int> order(train_set.size());
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (int q = static_cast<int>(order.size()) - 1; q > 0; --q)
      std::swap(order[q], order[rng.integer(counter++, 0, q)]);
    double total = 0.0;
    for (int idx : order) {
      auto lg = loss_and_gradients(P, *train_set[idx].graph, *train_set[idx].labels, tc.alpha, tc.gamma, ex);
      if (!std::isfinite(lg.loss)) {
        std::ostringstream os;
        os << "training diverged at epoch " << epoch << " (loss " << lg.loss << ")";
        throw TrainingDiverged(os.str());
      }
      total += lg.loss;
      double norm2 = 0.0;
      for (const auto& b : lg.grad.blocks)
        for (double v : b.v) norm2 += v * v;
      const double norm = std::sqrt(norm2);
      if (!std::isfinite(norm)) throw TrainingDiverged("non-finite gradient norm");
      const double scale = norm > tc.clip_norm ? tc.clip_norm / norm : 1.0;
      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t b = 0; b < P.blocks.size(); ++b) {
        auto& w = P.blocks[b].v;
        auto& mm = m1.blocks[b].v;
        auto& vv = m2.blocks[b].v;
        const auto& gg = lg.grad.blocks[b].v;
        for (std::size_t e = 0; e < w.size(); ++e) {
          const double g = gg[e] * scale;
          mm[e] = b1 * mm[e] + (1.0 - b1) * g;
          vv[e] = b2 * vv[e] + (1.0 - b2) * g * g;
          w[e] -= tc.rho * (mm[e] / c1) / (std::sqrt(vv[e] / c2) + eps);
        }
      }
    }
    EpochRecord rec{epoch, total / static_cast<double>(train_set.size()), {}};
    if (!validation.empty()) rec.validation = evaluate(P, validation, eval_k, ex);
    res.history.push_back(rec);
  }
  return res;
}

int select_grid_entry(const std::vector<GridEntry>& entries, double min_precision, bool* floor_met) {
  int best = -1;
  for (int e = 0; e < static_cast<int>(entries.size()); ++e) {
    const auto& m = entries[e].validation;
    if (m.precision_undefined || m.precision < min_precision) continue;
    if (best < 0) {
      best = e;
      continue;
    }
    const auto& b = entries[best].validation;
    if (m.recall > b.recall || (m.recall == b.recall && m.f1 > b.f1)) best = e;
  }
  if (floor_met) *floor_met = best >= 0;
  if (best >= 0) return best;
  for (int e = 0; e < static_cast<int>(entries.size()); ++e)
    if (best < 0 || entries[e].validation.f1 > entries[best].validation.f1) best = e;
  return best;
}

GridOutcome grid_search(const GridSpec& grid, const std::vector<Sample>& train_set,
                        const std::vector<Sample>& validation, int eval_k, Exec ex) {
  GridOutcome out;
  for (int d : grid.delta)
    for (int n : grid.nu)
      for (double r : grid.rho)
        for (double a : grid.alpha)
          for (double g : grid.gamma) {
            GridEntry e;
            e.gnn = {d, n};
            e.train = {r, a, g, grid.epochs, grid.seed, grid.clip_norm};
            const auto tr = train(train_set, {}, e.train, e.gnn, eval_k, ex);
            e.validation = evaluate(tr.params, validation, eval_k, ex);
            out.entries.push_back(e);
          }
  if (out.entries.empty()) throw SpecificationError("hyperparameter grid is empty");
  out.best = select_grid_entry(out.entries, grid.min_precision, &out.precision_floor_met);
  return out;
}

json to_json(const GnnParams& p) {
  json j;
  j["delta"] = p.config.delta;
  j["nu"] = p.config.nu;
  json blocks = json::array();
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    blocks.push_back({{"name", p.block_name(static_cast<int>(b))},
                      {"rows", p.blocks[b].rows},
                      {"cols", p.blocks[b].cols},
                      {"values", p.blocks[b].v}});
  j["blocks"] = std::move(blocks);
  return j;
}

GnnParams gnn_params_from_json(const json& j) {
  GnnConfig c{j.at("delta").get<int>(), j.at("nu").get<int>()};
  GnnParams p = init_params(c, 0);
  const auto& blocks = j.at("blocks");
  if (blocks.size() != p.blocks.size()) throw SpecificationError("checkpoint has the wrong number of blocks");
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& e = blocks[b];
    if (e.at("name").get<std::string>() != p.block_name(static_cast<int>(b)) ||
        e.at("rows").get<int>() != p.blocks[b].rows || e.at("cols").get<int>() != p.blocks[b].cols)
      throw SpecificationError("checkpoint block " + std::to_string(b) + " does not match the configuration");
    p.blocks[b].v = e.at("values").get<std::vector<double>>();
    if (p.blocks[b].v.size() != static_cast<std::size_t>(p.blocks[b].rows) * p.blocks[b].cols)
      throw SpecificationError("checkpoint block " + std::to_string(b) + " has the wrong size");
    for (double v : p.blocks[b].v)
      if (!std::isfinite(v)) throw SpecificationError("checkpoint holds a non-finite parameter");
  }
  return p;
}

}  // namespace reopt
