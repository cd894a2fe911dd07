// Copyright 2026 The lossydetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lossydetect/model/network.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "lossydetect/util/errors.h"
#include "lossydetect/util/random.h"

namespace lossydetect {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// Plain sequential sums. Eigen's vectorized reductions peel to the buffer's
// alignment, which makes the summation order depend on heap addresses.
template <typename M, typename T>
void add_row_sums(const M& m, T* out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    T acc{};
    for (Eigen::Index c = 0; c < m.cols(); ++c) acc += m(r, c);
    out[r] += acc;
  }
}

template <typename M, typename T>
void add_column_sums(const M& m, T* out) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    T acc{};
    for (Eigen::Index r = 0; r < m.rows(); ++r) acc += m(r, c);
    out[c] += acc;
  }
}

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kProbFloor = 1e-7;

// cols[(ci*9 + ky*3 + kx), y*w + x] = in[ci, y+ky-1, x+kx-1] (zero outside).
template <typename T>
void im2col3x3(const T* in, int c, int h, int w, T* cols) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    const T* plane = in + ci * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* row = cols + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
        const int dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          T* dst = row + static_cast<std::size_t>(y) * w;
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) {
            std::fill(dst, dst + w, T{});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(sy) * w;
          std::fill(dst, dst + x0, T{});
          std::copy(src + x0 + dx, src + x1 + dx, dst + x0);
          std::fill(dst + x1, dst + w, T{});
        }
      }
    }
  }
}

template <typename T>
void col2im3x3(const T* cols, int c, int h, int w, T* out) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    T* plane = out + ci * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* row = cols + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
        const int dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const T* src = row + static_cast<std::size_t>(y) * w;
          T* dst = plane + static_cast<std::size_t>(sy) * w;
          for (int x = x0; x < x1; ++x) dst[x + dx] += src[x];
        }
      }
    }
  }
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace

template <typename T>
Network<T>::Network(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  auto add = [&](std::vector<Tensor<T>>& list, std::string name, std::vector<int> shape,
                 T fill) {
    Tensor<T> t{std::move(name), std::move(shape), {}};
    t.values.assign(t.numel(), fill);
    list.push_back(std::move(t));
    return static_cast<int>(list.size()) - 1;
  };
  int c_in = 1;
  for (int i = 0; i < 4; ++i) {
    const int c = config_.conv_channels[i];
    const std::string p = "conv" + std::to_string(i + 1);
    conv_w_[i] = add(params_.tensors, p + ".weight", {c, c_in, 3, 3}, T{});
    conv_b_[i] = add(params_.tensors, p + ".bias", {c}, T{});
    const std::string b = "bn" + std::to_string(i + 1);
    bn_gamma_[i] = add(params_.tensors, b + ".weight", {c}, T(1));
    bn_beta_[i] = add(params_.tensors, b + ".bias", {c}, T{});
    bn_mean_[i] = add(params_.buffers, b + ".running_mean", {c}, T{});
    bn_var_[i] = add(params_.buffers, b + ".running_var", {c}, T(1));
    c_in = c;
  }
  const int hidden = config_.lstm_hidden;
  int input = sequence_feature_size();
  for (int l = 0; l < config_.lstm_layers; ++l) {
    for (int d = 0; d < config_.directions(); ++d) {
      const std::string p =
          "lstm.l" + std::to_string(l) + (d == 0 ? ".fwd" : ".bwd");
      lstm_idx_.push_back({add(params_.tensors, p + ".w_ih", {4 * hidden, input}, T{}),
                           add(params_.tensors, p + ".w_hh", {4 * hidden, hidden}, T{}),
                           add(params_.tensors, p + ".bias", {4 * hidden}, T{})});
    }
    input = config_.directions() * hidden;
  }
  head_w_ = add(params_.tensors, "head.weight", {config_.n_classes, config_.head_width}, T{});
  head_b_ = add(params_.tensors, "head.bias", {config_.n_classes}, T{});
}

template <typename T>
std::array<std::pair<int, int>, 4> Network<T>::block_output_sizes() const {
  std::array<std::pair<int, int>, 4> out{};
  int h = config_.n_bins(), w = config_.n_frames;
  for (int i = 0; i < 4; ++i) {
    h /= config_.pool_sizes[i].first;
    w /= config_.pool_sizes[i].second;
    out[i] = {h, w};
  }
  return out;
}

template <typename T>
int Network<T>::sequence_feature_size() const {
  return config_.conv_channels[3] * block_output_sizes()[3].first;
}

template <typename T>
void Network<T>::set_parameters(ParameterSet<T> params) {
  auto check = [](const std::vector<Tensor<T>>& a, const std::vector<Tensor<T>>& b) {
    if (a.size() != b.size()) throw ContractError("parameter tensor count mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].name != b[i].name || a[i].shape != b[i].shape ||
          b[i].values.size() != b[i].numel()) {
        throw ContractError("parameter mismatch at " + a[i].name);
      }
    }
  };
  check(params_.tensors, params.tensors);
  check(params_.buffers, params.buffers);
  params_ = std::move(params);
}

template <typename T>
void Network<T>::initialize(uint64_t seed) {
  Rng rng = make_rng(seed, 0x1417);
  auto normal = [&](std::vector<T>& v, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (T& x : v) x = static_cast<T>(dist(rng));
  };
  auto uniform = [&](std::vector<T>& v, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& x : v) x = static_cast<T>(dist(rng));
  };
  for (int i = 0; i < 4; ++i) {
    auto& w = params_.tensors[conv_w_[i]];
    normal(w.values, std::sqrt(2.0 / (w.shape[1] * 9)));
    std::fill(params_.tensors[conv_b_[i]].values.begin(),
              params_.tensors[conv_b_[i]].values.end(), T{});
    std::fill(params_.tensors[bn_gamma_[i]].values.begin(),
              params_.tensors[bn_gamma_[i]].values.end(), T(1));
    std::fill(params_.tensors[bn_beta_[i]].values.begin(),
              params_.tensors[bn_beta_[i]].values.end(), T{});
    std::fill(params_.buffers[bn_mean_[i]].values.begin(),
              params_.buffers[bn_mean_[i]].values.end(), T{});
    std::fill(params_.buffers[bn_var_[i]].values.begin(),
              params_.buffers[bn_var_[i]].values.end(), T(1));
  }
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(config_.lstm_hidden));
  for (const auto& idx : lstm_idx_) {
    uniform(params_.tensors[idx[0]].values, lstm_bound);
    uniform(params_.tensors[idx[1]].values, lstm_bound);
    std::fill(params_.tensors[idx[2]].values.begin(), params_.tensors[idx[2]].values.end(),
              T{});
  }
  uniform(params_.tensors[head_w_].values, 1.0 / std::sqrt(static_cast<double>(config_.head_width)));
  std::fill(params_.tensors[head_b_].values.begin(), params_.tensors[head_b_].values.end(), T{});
}

template <typename T>
std::vector<T> Network<T>::forward(BatchView<T> input, bool training_mode,
                                   ForwardCache<T>* cache) {
  if (!training_mode) return run(input, false, cache);
  ForwardCache<T> local;
  ForwardCache<T>* c = cache ? cache : &local;
  auto probs = run(input, true, c);
  update_running_stats(*c);
  return probs;
}

template <typename T>
std::vector<T> Network<T>::infer(BatchView<T> input, ForwardCache<T>* cache) const {
  return run(input, false, cache);
}

template <typename T>
void Network<T>::update_running_stats(const ForwardCache<T>& cache) {
  for (int i = 0; i < 4; ++i) {
    const auto& blk = cache.blocks[i];
    const double n = static_cast<double>(cache.batch) * blk.h * blk.w;
    auto& rm = params_.buffers[bn_mean_[i]].values;
    auto& rv = params_.buffers[bn_var_[i]].values;
    for (int ch = 0; ch < blk.c_out; ++ch) {
      const double var = 1.0 / (static_cast<double>(blk.inv_std[ch]) * blk.inv_std[ch]) - kBnEps;
      const double unbiased = n > 1 ? var * n / (n - 1) : var;
      rm[ch] = static_cast<T>((1 - kBnMomentum) * rm[ch] + kBnMomentum * blk.mean[ch]);
      rv[ch] = static_cast<T>((1 - kBnMomentum) * rv[ch] + kBnMomentum * unbiased);
    }
  }
}

template <typename T>
std::vector<T> Network<T>::run(BatchView<T> input, bool training,
                               ForwardCache<T>* cache) const {
  const auto& shape = input.shape;
  if (shape[0] < 1 || shape[1] != 1 || shape[2] != config_.n_bins() ||
      shape[3] != config_.n_frames ||
      input.data.size() != static_cast<std::size_t>(shape[0]) * shape[2] * shape[3]) {
    throw ContractError("network input must be [B, 1, " + std::to_string(config_.n_bins()) +
                        ", " + std::to_string(config_.n_frames) + "], got [" +
                        std::to_string(shape[0]) + ", " + std::to_string(shape[1]) + ", " +
                        std::to_string(shape[2]) + ", " + std::to_string(shape[3]) + "]");
  }
  const int batch = shape[0];
  if (cache) {
    *cache = ForwardCache<T>{};
    cache->batch = batch;
    cache->training = training;
    cache->blocks.resize(4);
  }

  std::vector<T> x(input.data.begin(), input.data.end());
  int c = 1, h = config_.n_bins(), w = config_.n_frames;
  std::vector<T> cols, act, normed;
  for (int i = 0; i < 4; ++i) {
    const int c_out = config_.conv_channels[i];
    const auto [ph, pw] = config_.pool_sizes[i];
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    const int k = c * 9;

    // Convolution + bias + ReLU.
    act.resize(static_cast<std::size_t>(batch) * c_out * hw);
    cols.resize(static_cast<std::size_t>(k) * hw);
    ConstMap<T> weight(params_.tensors[conv_w_[i]].values.data(), c_out, k);
    const auto& bias = params_.tensors[conv_b_[i]].values;
    for (int b = 0; b < batch; ++b) {
      im2col3x3(x.data() + static_cast<std::size_t>(b) * c * hw, c, h, w, cols.data());
      Map<T> out(act.data() + static_cast<std::size_t>(b) * c_out * hw, c_out, hw);
      out.noalias() = weight * ConstMap<T>(cols.data(), k, hw);
      for (int o = 0; o < c_out; ++o) {
        out.row(o) = (out.row(o).array() + bias[o]).cwiseMax(T{});
      }
    }

    // Batch normalisation.
    std::vector<T> mean(c_out), inv_std(c_out);
    if (training) {
      const double n = static_cast<double>(batch) * hw;
      for (int o = 0; o < c_out; ++o) {
        double s = 0.0, ss = 0.0;
        for (int b = 0; b < batch; ++b) {
          const T* p = act.data() + (static_cast<std::size_t>(b) * c_out + o) * hw;
          for (std::size_t j = 0; j < hw; ++j) {
            s += p[j];
            ss += static_cast<double>(p[j]) * p[j];
          }
        }
        const double m = s / n;
        const double var = std::max(0.0, ss / n - m * m);
        mean[o] = static_cast<T>(m);
        inv_std[o] = static_cast<T>(1.0 / std::sqrt(var + kBnEps));
      }
    } else {
      const auto& rm = params_.buffers[bn_mean_[i]].values;
      const auto& rv = params_.buffers[bn_var_[i]].values;
      for (int o = 0; o < c_out; ++o) {
        mean[o] = rm[o];
        inv_std[o] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(rv[o]) + kBnEps));
      }
    }
    const auto& gamma = params_.tensors[bn_gamma_[i]].values;
    const auto& beta = params_.tensors[bn_beta_[i]].values;
    normed.resize(act.size());
    for (int b = 0; b < batch; ++b) {
      for (int o = 0; o < c_out; ++o) {
        const std::size_t off = (static_cast<std::size_t>(b) * c_out + o) * hw;
        const T scale = gamma[o] * inv_std[o];
        const T shift = beta[o] - mean[o] * scale;
        for (std::size_t j = 0; j < hw; ++j) normed[off + j] = act[off + j] * scale + shift;
      }
    }

    // Max pooling (floor mode).
    const int oh = h / ph, ow = w / pw;
    const std::size_t ohw = static_cast<std::size_t>(oh) * ow;
    std::vector<T> pooled(static_cast<std::size_t>(batch) * c_out * ohw);
    std::vector<int32_t> argmax(cache ? pooled.size() : 0);
    for (int b = 0; b < batch; ++b) {
      for (int o = 0; o < c_out; ++o) {
        const std::size_t plane = static_cast<std::size_t>(b) * c_out + o;
        const T* src = normed.data() + plane * hw;
        T* dst = pooled.data() + plane * ohw;
        for (int y = 0; y < oh; ++y) {
          for (int xx = 0; xx < ow; ++xx) {
            int best = (y * ph) * w + xx * pw;
            T best_v = src[best];
            for (int dy = 0; dy < ph; ++dy) {
              for (int dx = 0; dx < pw; ++dx) {
                const int idx = (y * ph + dy) * w + xx * pw + dx;
                if (src[idx] > best_v) {
                  best_v = src[idx];
                  best = idx;
                }
              }
            }
            dst[y * ow + xx] = best_v;
            if (cache) argmax[plane * ohw + y * ow + xx] = best;
          }
        }
      }
    }

    if (cache) {
      auto& blk = cache->blocks[i];
      blk.c_in = c;
      blk.c_out = c_out;
      blk.h = h;
      blk.w = w;
      blk.out_h = oh;
      blk.out_w = ow;
      blk.input = std::move(x);
      blk.activation = act;
      blk.mean = mean;
      blk.inv_std = inv_std;
      blk.argmax = std::move(argmax);
    }
    x = std::move(pooled);
    c = c_out;
    h = oh;
    w = ow;
  }

  // [B, C, F, T] -> step-major sequence [T*B, C*F].
  const int steps = w;
  const int feat = c * h;
  RowMat<T> seq(static_cast<Eigen::Index>(steps) * batch, feat);
  for (int b = 0; b < batch; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      for (int f = 0; f < h; ++f) {
        const T* src = x.data() + ((static_cast<std::size_t>(b) * c + ch) * h + f) * w;
        for (int t = 0; t < steps; ++t) seq(t * batch + b, ch * h + f) = src[t];
      }
    }
  }

  const int hidden = config_.lstm_hidden;
  const int dirs = config_.directions();
  if (cache) {
    cache->steps = steps;
    cache->lstm.resize(config_.lstm_layers);
  }
  RowMat<T> final_h(batch, dirs * hidden);
  for (int l = 0; l < config_.lstm_layers; ++l) {
    RowMat<T> out(static_cast<Eigen::Index>(steps) * batch, dirs * hidden);
    if (cache) {
      cache->lstm[l].input_size = static_cast<int>(seq.cols());
      cache->lstm[l].directions.resize(dirs);
    }
    for (int d = 0; d < dirs; ++d) {
      const auto& idx = lstm_idx_[l * dirs + d];
      ConstMap<T> w_ih(params_.tensors[idx[0]].values.data(), 4 * hidden, seq.cols());
      ConstMap<T> w_hh(params_.tensors[idx[1]].values.data(), 4 * hidden, hidden);
      Eigen::Map<const RowVec<T>> bias(params_.tensors[idx[2]].values.data(), 4 * hidden);
      RowMat<T> proj = seq * w_ih.transpose();
      RowMat<T> gates(proj.rows(), 4 * hidden), cell(proj.rows(), hidden),
          hid(proj.rows(), hidden);
      RowMat<T> h_prev = RowMat<T>::Zero(batch, hidden);
      RowMat<T> c_prev = RowMat<T>::Zero(batch, hidden);
      for (int s = 0; s < steps; ++s) {
        const int t = d == 0 ? s : steps - 1 - s;
        RowMat<T> g = proj.middleRows(t * batch, batch);
        g.noalias() += h_prev * w_hh.transpose();
        g.rowwise() += bias;
        auto ga = g.array();
        ga.leftCols(hidden) = ga.leftCols(hidden).unaryExpr([](T v) { return sigmoid(v); });
        ga.middleCols(hidden, hidden) =
            ga.middleCols(hidden, hidden).unaryExpr([](T v) { return sigmoid(v); });
        ga.middleCols(2 * hidden, hidden) = ga.middleCols(2 * hidden, hidden).tanh();
        ga.rightCols(hidden) = ga.rightCols(hidden).unaryExpr([](T v) { return sigmoid(v); });
        RowMat<T> c_new = (ga.middleCols(hidden, hidden) * c_prev.array() +
                           ga.leftCols(hidden) * ga.middleCols(2 * hidden, hidden))
                              .matrix();
        RowMat<T> h_new = (ga.rightCols(hidden) * c_new.array().tanh()).matrix();
        gates.middleRows(t * batch, batch) = g;
        cell.middleRows(t * batch, batch) = c_new;
        hid.middleRows(t * batch, batch) = h_new;
        out.block(t * batch, d * hidden, batch, hidden) = h_new;
        h_prev = std::move(h_new);
        c_prev = std::move(c_new);
      }
      if (l == config_.lstm_layers - 1) final_h.middleCols(d * hidden, hidden) = h_prev;
      if (cache) {
        auto& cd = cache->lstm[l].directions[d];
        cd.gates.assign(gates.data(), gates.data() + gates.size());
        cd.cell.assign(cell.data(), cell.data() + cell.size());
        cd.hidden.assign(hid.data(), hid.data() + hid.size());
      }
    }
    if (cache) cache->lstm[l].input.assign(seq.data(), seq.data() + seq.size());
    seq = std::move(out);
  }

  // Dense head + softmax.
  const int n_cls = config_.n_classes;
  ConstMap<T> head_w(params_.tensors[head_w_].values.data(), n_cls, config_.head_width);
  Eigen::Map<const RowVec<T>> head_b(params_.tensors[head_b_].values.data(), n_cls);
  RowMat<T> logits = final_h * head_w.transpose();
  logits.rowwise() += head_b;
  std::vector<T> probs(static_cast<std::size_t>(batch) * n_cls);
  for (int b = 0; b < batch; ++b) {
    const T m = logits.row(b).maxCoeff();
    T z = 0;
    for (int k = 0; k < n_cls; ++k) z += std::exp(logits(b, k) - m);
    for (int k = 0; k < n_cls; ++k) probs[b * n_cls + k] = std::exp(logits(b, k) - m) / z;
  }
  if (cache) {
    cache->features.assign(final_h.data(), final_h.data() + final_h.size());
    cache->probabilities = probs;
  }
  return probs;
}

template <typename T>
void Network<T>::backward(const ForwardCache<T>& cache, std::span<const T> logit_grad,
                          ParameterSet<T>* grads, std::vector<T>* input_grad) const {
  const int batch = cache.batch;
  const int n_cls = config_.n_classes;
  if (cache.blocks.size() != 4 || logit_grad.size() != static_cast<std::size_t>(batch) * n_cls) {
    throw ContractError("backward: cache or gradient does not match this network");
  }
  auto grad_of = [&](int idx) -> T* {
    return grads ? grads->tensors[idx].values.data() : nullptr;
  };
  const int hidden = config_.lstm_hidden;
  const int dirs = config_.directions();
  const int steps = cache.steps;
  const Eigen::Index rows = static_cast<Eigen::Index>(steps) * batch;

  // Head.
  ConstMap<T> dlogits(logit_grad.data(), batch, n_cls);
  ConstMap<T> features(cache.features.data(), batch, config_.head_width);
  ConstMap<T> head_w(params_.tensors[head_w_].values.data(), n_cls, config_.head_width);
  if (grads) {
    Map<T>(grad_of(head_w_), n_cls, config_.head_width).noalias() += dlogits.transpose() * features;
    add_column_sums(dlogits, grad_of(head_b_));
  }
  RowMat<T> dfeat = dlogits * head_w;

  // LSTM, top layer first.
  RowMat<T> d_out = RowMat<T>::Zero(rows, dirs * hidden);
  d_out.block((steps - 1) * batch, 0, batch, hidden) = dfeat.leftCols(hidden);
  if (dirs == 2) d_out.block(0, hidden, batch, hidden) = dfeat.rightCols(hidden);
  for (int l = config_.lstm_layers - 1; l >= 0; --l) {
    const auto& layer = cache.lstm[l];
    ConstMap<T> x(layer.input.data(), rows, layer.input_size);
    RowMat<T> dx = RowMat<T>::Zero(rows, layer.input_size);
    for (int d = 0; d < dirs; ++d) {
      const auto& idx = lstm_idx_[l * dirs + d];
      const auto& cd = layer.directions[d];
      ConstMap<T> gates(cd.gates.data(), rows, 4 * hidden);
      ConstMap<T> cell(cd.cell.data(), rows, hidden);
      ConstMap<T> hid(cd.hidden.data(), rows, hidden);
      ConstMap<T> w_ih(params_.tensors[idx[0]].values.data(), 4 * hidden, layer.input_size);
      ConstMap<T> w_hh(params_.tensors[idx[1]].values.data(), 4 * hidden, hidden);
      RowMat<T> dz(rows, 4 * hidden);
      RowMat<T> dh_next = RowMat<T>::Zero(batch, hidden);
      RowMat<T> dc_next = RowMat<T>::Zero(batch, hidden);
      RowMat<T> zeros = RowMat<T>::Zero(batch, hidden);
      for (int s = steps - 1; s >= 0; --s) {
        const int t = d == 0 ? s : steps - 1 - s;
        const int t_prev = d == 0 ? t - 1 : t + 1;
        const bool first = s == 0;
        auto g = gates.middleRows(t * batch, batch).array();
        auto gi = g.leftCols(hidden), gf = g.middleCols(hidden, hidden),
             gg = g.middleCols(2 * hidden, hidden), go = g.rightCols(hidden);
        const auto c_t = cell.middleRows(t * batch, batch).array();
        const RowMat<T> c_prev_m = first ? zeros : RowMat<T>(cell.middleRows(t_prev * batch, batch));
        const auto c_prev = c_prev_m.array();
        RowMat<T> dh = d_out.block(t * batch, d * hidden, batch, hidden) + dh_next;
        const auto tanh_c = c_t.tanh();
        RowMat<T> dc = (dh.array() * go * (T(1) - tanh_c.square()) + dc_next.array()).matrix();
        auto dgates = dz.middleRows(t * batch, batch);
        dgates.leftCols(hidden) = (dc.array() * gg * gi * (T(1) - gi)).matrix();
        dgates.middleCols(hidden, hidden) = (dc.array() * c_prev * gf * (T(1) - gf)).matrix();
        dgates.middleCols(2 * hidden, hidden) = (dc.array() * gi * (T(1) - gg.square())).matrix();
        dgates.rightCols(hidden) = (dh.array() * tanh_c * go * (T(1) - go)).matrix();
        dc_next = (dc.array() * gf).matrix();
        dh_next.noalias() = dgates * w_hh;
        if (grads && !first) {
          Map<T>(grad_of(idx[1]), 4 * hidden, hidden).noalias() +=
              dgates.transpose() * hid.middleRows(t_prev * batch, batch);
        }
      }
      if (grads) {
        Map<T>(grad_of(idx[0]), 4 * hidden, layer.input_size).noalias() += dz.transpose() * x;
        add_column_sums(dz, grad_of(idx[2]));
      }
      dx.noalias() += dz * w_ih;
    }
    d_out = std::move(dx);
  }

  // Sequence gradient back to [B, C, F, T].
  const auto& last = cache.blocks[3];
  std::vector<T> dpool(static_cast<std::size_t>(batch) * last.c_out * last.out_h * last.out_w);
  for (int b = 0; b < batch; ++b) {
    for (int ch = 0; ch < last.c_out; ++ch) {
      for (int f = 0; f < last.out_h; ++f) {
        T* dst = dpool.data() +
                 ((static_cast<std::size_t>(b) * last.c_out + ch) * last.out_h + f) * last.out_w;
        for (int t = 0; t < steps; ++t) dst[t] = d_out(t * batch + b, ch * last.out_h + f);
      }
    }
  }

  std::vector<T> dact, cols, dcols;
  for (int i = 3; i >= 0; --i) {
    const auto& blk = cache.blocks[i];
    const std::size_t hw = static_cast<std::size_t>(blk.h) * blk.w;
    const std::size_t ohw = static_cast<std::size_t>(blk.out_h) * blk.out_w;
    const std::size_t planes = static_cast<std::size_t>(batch) * blk.c_out;
    const bool need_dx = i > 0 || input_grad != nullptr;
    if (!need_dx && !grads) break;

    // Un-pool into the batch-norm output gradient.
    dact.assign(planes * hw, T{});
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t j = 0; j < ohw; ++j) {
        dact[p * hw + blk.argmax[p * ohw + j]] += dpool[p * ohw + j];
      }
    }

    // Batch norm (and ReLU) backward, in place on dact.
    const auto& gamma = params_.tensors[bn_gamma_[i]].values;
    const double n = static_cast<double>(batch) * hw;
    for (int o = 0; o < blk.c_out; ++o) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int b = 0; b < batch; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * blk.c_out + o) * hw;
        for (std::size_t j = 0; j < hw; ++j) {
          const double xhat = (blk.activation[off + j] - blk.mean[o]) * blk.inv_std[o];
          sum_dy += dact[off + j];
          sum_dy_xhat += dact[off + j] * xhat;
        }
      }
      if (grads) {
        grad_of(bn_gamma_[i])[o] += static_cast<T>(sum_dy_xhat);
        grad_of(bn_beta_[i])[o] += static_cast<T>(sum_dy);
      }
      const T scale = gamma[o] * blk.inv_std[o];
      const T mean_dy = static_cast<T>(cache.training ? sum_dy / n : 0.0);
      const T mean_dy_xhat = static_cast<T>(cache.training ? sum_dy_xhat / n : 0.0);
      for (int b = 0; b < batch; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * blk.c_out + o) * hw;
        for (std::size_t j = 0; j < hw; ++j) {
          const T a = blk.activation[off + j];
          if (a <= T{}) {
            dact[off + j] = T{};
            continue;
          }
          const T xhat = (a - blk.mean[o]) * blk.inv_std[o];
          dact[off + j] = scale * (dact[off + j] - mean_dy - xhat * mean_dy_xhat);
        }
      }
    }

    // Convolution backward.
    const int k = blk.c_in * 9;
    ConstMap<T> weight(params_.tensors[conv_w_[i]].values.data(), blk.c_out, k);
    std::vector<T> dx(need_dx ? static_cast<std::size_t>(batch) * blk.c_in * hw : 0, T{});
    cols.resize(static_cast<std::size_t>(k) * hw);
    if (need_dx) dcols.resize(cols.size());
    for (int b = 0; b < batch; ++b) {
      ConstMap<T> dy(dact.data() + static_cast<std::size_t>(b) * blk.c_out * hw, blk.c_out, hw);
      if (grads) {
        im2col3x3(blk.input.data() + static_cast<std::size_t>(b) * blk.c_in * hw, blk.c_in,
                  blk.h, blk.w, cols.data());
        Map<T>(grad_of(conv_w_[i]), blk.c_out, k).noalias() +=
            dy * ConstMap<T>(cols.data(), k, hw).transpose();
        add_row_sums(dy, grad_of(conv_b_[i]));
      }
      if (need_dx) {
        Map<T>(dcols.data(), k, hw).noalias() = weight.transpose() * dy;
        col2im3x3(dcols.data(), blk.c_in, blk.h, blk.w,
                  dx.data() + static_cast<std::size_t>(b) * blk.c_in * hw);
      }
    }
    dpool = std::move(dx);
  }
  if (input_grad) *input_grad = std::move(dpool);
}

template <typename T>
T cross_entropy(std::span<const T> probabilities, std::span<const int> labels, int n_classes) {
  if (labels.empty() || probabilities.size() != labels.size() * n_classes) {
    throw ContractError("cross_entropy: shape mismatch");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] < 0 || labels[b] >= n_classes) throw ContractError("label out of range");
    const double p = probabilities[b * n_classes + labels[b]];
    total -= std::log(std::max(p, kProbFloor));
  }
  return static_cast<T>(total / static_cast<double>(labels.size()));
}

template <typename T>
std::vector<T> cross_entropy_logit_grad(std::span<const T> probabilities,
                                        std::span<const int> labels, int n_classes) {
  if (labels.empty() || probabilities.size() != labels.size() * n_classes) {
    throw ContractError("cross_entropy_logit_grad: shape mismatch");
  }
  const T inv_b = T(1) / static_cast<T>(labels.size());
  std::vector<T> g(probabilities.size(), T{});
  for (std::size_t b = 0; b < labels.size(); ++b) {
    // The clamp makes the loss flat where p[label] < floor.
    if (probabilities[b * n_classes + labels[b]] < static_cast<T>(kProbFloor)) continue;
    for (int k = 0; k < n_classes; ++k) {
      g[b * n_classes + k] =
          (probabilities[b * n_classes + k] - (k == labels[b] ? T(1) : T{})) * inv_b;
    }
  }
  return g;
}

template <typename T>
std::vector<T> probability_logit_grad(std::span<const T> probabilities, int cls,
                                      int n_classes) {
  std::vector<T> g(probabilities.size());
  const std::size_t batch = probabilities.size() / n_classes;
  for (std::size_t b = 0; b < batch; ++b) {
    const T pc = probabilities[b * n_classes + cls];
    for (int k = 0; k < n_classes; ++k) {
      g[b * n_classes + k] = pc * ((k == cls ? T(1) : T{}) - probabilities[b * n_classes + k]);
    }
  }
  return g;
}

std::size_t expected_parameter_count(const ModelConfig& config) {
  std::size_t n = 0;
  int c_in = 1;
  for (int c : config.conv_channels) {
    n += static_cast<std::size_t>(c) * c_in * 9 + c;  // conv weight + bias
    n += 2 * static_cast<std::size_t>(c);              // batch-norm scale + shift
    c_in = c;
  }
  int h = config.n_bins();
  for (const auto& p : config.pool_sizes) h /= p.first;
  std::size_t input = static_cast<std::size_t>(config.conv_channels[3]) * h;
  const std::size_t hidden = config.lstm_hidden;
  for (int l = 0; l < config.lstm_layers; ++l) {
    n += config.directions() * (4 * hidden * (input + hidden) + 4 * hidden);
    input = config.directions() * hidden;
  }
  n += static_cast<std::size_t>(config.n_classes) * config.head_width + config.n_classes;
  return n;
}

template class Network<float>;
template class Network<double>;
template float cross_entropy<float>(std::span<const float>, std::span<const int>, int);
template double cross_entropy<double>(std::span<const double>, std::span<const int>, int);
template std::vector<float> cross_entropy_logit_grad<float>(std::span<const float>,
                                                            std::span<const int>, int);
template std::vector<double> cross_entropy_logit_grad<double>(std::span<const double>,
                                                              std::span<const int>, int);
template std::vector<float> probability_logit_grad<float>(std::span<const float>, int, int);
template std::vector<double> probability_logit_grad<double>(std::span<const double>, int, int);

}  // namespace lossydetect
