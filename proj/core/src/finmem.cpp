#include "cpnet/finmem.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cpnet/rng.hpp"

namespace cpnet {

void ChainParams::validate() const {
  if (r <= 0 || r >= 1 || eps < 0 || eps >= 1)
    throw std::invalid_argument("finmem: r in (0,1), eps in [0,1) required");
  if (r >= 1 - eps)
    throw std::invalid_argument("finmem: need r < 1 - eps (rho < 1)");
  if (M < 1) throw std::invalid_argument("finmem: M >= 1 required");
}

void TandemParams::validate() const {
  if (delta <= 0 || delta >= 1 || eps <= 0 || eps >= 1)
    throw std::invalid_argument("finmem: delta, eps in (0,1) required");
  if (delta <= eps)
    throw std::invalid_argument("finmem: need delta > eps (rho < 1)");
  if (M < 1) throw std::invalid_argument("finmem: M >= 1 required");
}

std::vector<double> steady_state(const ChainParams& p) {
  p.validate();
  const double rho = p.rho(), sigma = p.sigma();
  const double denom = 1.0 - sigma * std::pow(rho, double(p.M));
  std::vector<double> pi(p.M + 1);
  for (std::size_t i = 0; i < p.M; ++i)
    pi[i] = std::pow(rho, double(i)) * (1 - rho) / denom;
  pi[p.M] =
      p.eps * sigma * std::pow(rho, double(p.M) - 1) * (1 - rho) / denom;
  double sum = 0;
  for (double v : pi) sum += v;
  if (std::fabs(sum - 1.0) > 1e-12)
    throw std::runtime_error("steady_state: normalization identity violated");
  return pi;
}

double loss_upper_bound(const ChainParams& p, bool* clipped) {
  p.validate();
  const double rho = p.rho(), sigma = p.sigma(), eps = p.eps;
  const double M = static_cast<double>(p.M);
  const double denom = 1.0 - sigma * std::pow(rho, M);
  double brace = eps * M * sigma +
                 (1 - 2 * sigma + M * sigma - 2 * eps * M * sigma) * rho -
                 (1 - eps) * M * sigma * rho * rho +
                 sigma * sigma * std::pow(rho, M + 1);
  double bound = std::pow(rho, M - 1) / (denom * denom) * brace;
  bool clip = bound < 0 || bound > 1;
  if (clipped) *clipped = clip;
  return std::min(1.0, std::max(0.0, bound));
}

double tandem_rate_loss(const TandemParams& p) {
  p.validate();
  auto pi = steady_state(p.induced());
  return pi.back();
}

namespace {

// Sparse row over undecoded message indices, kept sorted by index.
using SparseRow = std::vector<std::pair<std::uint64_t, gf_t>>;

gf_t row_coeff(const SparseRow& row, std::uint64_t idx) {
  auto it = std::lower_bound(
      row.begin(), row.end(), idx,
      [](const auto& e, std::uint64_t v) { return e.first < v; });
  return (it != row.end() && it->first == idx) ? it->second : gf_t(0);
}

// row -= c * other (over GF(2^m): row += c * other).
void row_axpy(const FieldSpec& f, SparseRow& row, gf_t c,
              const SparseRow& other) {
  SparseRow out;
  out.reserve(row.size() + other.size());
  auto a = row.begin();
  auto b = other.begin();
  while (a != row.end() || b != other.end()) {
    if (b == other.end() || (a != row.end() && a->first < b->first)) {
      out.push_back(*a++);
    } else if (a == row.end() || b->first < a->first) {
      gf_t v = f.mul(c, b->second);
      if (v) out.push_back({b->first, v});
      ++b;
    } else {
      gf_t v = FieldSpec::add(a->second, f.mul(c, b->second));
      if (v) out.push_back({a->first, v});
      ++a;
      ++b;
    }
  }
  row = std::move(out);
}

// Incremental sparse Gaussian elimination over a sliding message window.
struct WindowDecoder {
  const FieldSpec& f;
  std::map<std::uint64_t, SparseRow> rows;  // pivot index -> row
  std::set<std::uint64_t> known;            // already-decoded messages

  explicit WindowDecoder(const FieldSpec& field) : f(field) {}

  // Absorbs a received combination; returns decoded message indices.
  std::vector<std::uint64_t> absorb(SparseRow row) {
    std::vector<std::uint64_t> decoded;
    // Contributions of already-decoded messages are known and subtract away.
    row.erase(std::remove_if(row.begin(), row.end(),
                             [&](const auto& e) {
                               return known.count(e.first) != 0;
                             }),
              row.end());
    reduce(row);
    if (row.empty()) return decoded;
    gf_t inv = f.inv(row.front().second);
    for (auto& [i, c] : row) c = f.mul(c, inv);
    std::uint64_t piv = row.front().first;
    // Back-substitute the new pivot out of existing rows.
    for (auto& [p, r] : rows) {
      gf_t c = row_coeff(r, piv);
      if (c) row_axpy(f, r, c, row);
    }
    rows.emplace(piv, std::move(row));
    harvest(decoded);
    return decoded;
  }

  void reduce(SparseRow& row) const {
    while (!row.empty()) {
      auto it = rows.find(row.front().first);
      if (it == rows.end()) return;
      row_axpy(f, row, row.front().second, it->second);
    }
  }

  // Removes unit rows (decoded messages) and eliminates their columns.
  void harvest(std::vector<std::uint64_t>& decoded) {
    bool more = true;
    while (more) {
      more = false;
      for (auto it = rows.begin(); it != rows.end(); ++it) {
        if (it->second.size() != 1) continue;
        std::uint64_t idx = it->first;
        rows.erase(it);
        for (auto& [p, r] : rows) {
          gf_t c = row_coeff(r, idx);
          if (c) {
            // Subtracting a decoded message just deletes the entry.
            r.erase(std::remove_if(r.begin(), r.end(),
                                   [&](const auto& e) {
                                     return e.first == idx;
                                   }),
                    r.end());
          }
        }
        known.insert(idx);
        decoded.push_back(idx);
        more = true;
        break;
      }
    }
  }

  // Rows fully supported below the encoder window can never complete; drops
  // them and reports their message indices as lost.  Also forgets decoded
  // indices that can no longer appear in packets.
  std::vector<std::uint64_t> prune_frozen(std::uint64_t window_min) {
    std::vector<std::uint64_t> lost;
    for (auto it = rows.begin(); it != rows.end();) {
      const SparseRow& r = it->second;
      bool frozen = true;
      for (const auto& [i, c] : r)
        if (i >= window_min) { frozen = false; break; }
      if (frozen && r.size() > 1) {
        lost.push_back(it->first);
        it = rows.erase(it);
      } else {
        ++it;
      }
    }
    known.erase(known.begin(), known.lower_bound(window_min));
    return lost;
  }
};

}  // namespace

IsolatedResult simulate_isolated(const ChainParams& p, unsigned field_degree,
                                 std::uint64_t epochs, FiniteMemoryMode mode,
                                 std::uint64_t seed) {
  p.validate();
  FieldSpec f(field_degree);
  const double q = f.order();
  Rng rng(seed);
  IsolatedResult res;
  double delay_sum = 0;

  if (mode == FiniteMemoryMode::Accumulator) {
    // Backlog chain with finite-q transition probabilities; decode
    // bookkeeping per the return-to-zero rule.
    std::size_t x = 0;
    std::deque<std::uint64_t> outstanding;
    for (std::uint64_t now = 0; now < epochs; ++now) {
      bool arrival = rng.bernoulli(p.r);
      bool delivered = rng.bernoulli(1 - p.eps);
      if (arrival) {
        ++res.arrivals;
        double p_grow =
            1.0 - std::pow(q, static_cast<double>(x) -
                                  static_cast<double>(p.M));
        if (rng.bernoulli(p_grow)) {
          outstanding.push_back(now);
          ++x;
        } else {
          // Innovation did not increase: equivalent to exceeding memory;
          // the whole outstanding group is unrecoverable.
          outstanding.clear();
        }
      }
      if (delivered && x > 0 &&
          rng.bernoulli(1.0 - std::pow(q, -static_cast<double>(x)))) {
        --x;
        if (x == 0) {
          for (std::uint64_t t0 : outstanding) {
            ++res.decoded;
            delay_sum += static_cast<double>(now - t0);
          }
          outstanding.clear();
        }
      }
    }
  } else {
    // Shift register with exact encoding-vector tracking.
    std::deque<std::uint64_t> window;  // stored message indices
    std::map<std::uint64_t, std::uint64_t> arrival_epoch;
    WindowDecoder dec(f);
    std::uint64_t next_msg = 0;
    auto note_decoded = [&](const std::vector<std::uint64_t>& ids,
                            std::uint64_t now) {
      for (std::uint64_t id : ids) {
        auto it = arrival_epoch.find(id);
        if (it == arrival_epoch.end()) continue;
        ++res.decoded;
        delay_sum += static_cast<double>(now - it->second);
        arrival_epoch.erase(it);
      }
    };
    for (std::uint64_t now = 0; now < epochs; ++now) {
      if (rng.bernoulli(p.r)) {
        ++res.arrivals;
        window.push_back(next_msg);
        arrival_epoch[next_msg] = now;
        ++next_msg;
        if (window.size() > p.M) window.pop_front();
      }
      if (!window.empty() && rng.bernoulli(1 - p.eps)) {
        SparseRow row;
        for (std::uint64_t idx : window) {
          gf_t c = rng.field_element(f);
          if (c) row.push_back({idx, c});
        }
        note_decoded(dec.absorb(std::move(row)), now);
      }
      if ((now & 0xFF) == 0 && !window.empty()) {
        for (std::uint64_t id : dec.prune_frozen(window.front())) (void)id;
        // Abandoned indices are counted at the end as never decoded.
      }
    }
  }

  res.loss_rate =
      res.arrivals == 0
          ? 0.0
          : 1.0 - static_cast<double>(res.decoded) / res.arrivals;
  res.mean_delay = res.decoded == 0 ? 0.0 : delay_sum / res.decoded;
  return res;
}

TandemSimResult simulate_tandem(const TandemParams& p, unsigned field_degree,
                                std::uint64_t epochs, std::uint64_t seed) {
  p.validate();
  FieldSpec f(field_degree);
  const double q = f.order();
  Rng rng(seed);
  std::size_t x = 0;
  std::uint64_t y = 0;
  for (std::uint64_t now = 0; now < epochs; ++now) {
    bool arrival = rng.bernoulli(1 - p.delta);
    bool delivered = rng.bernoulli(1 - p.eps);
    // The epoch's reception is folded into memory before the epoch's
    // transmission, so an arrival can be forwarded in the same epoch (the
    // two events cancel in x while y still advances).
    if (arrival &&
        rng.bernoulli(1.0 - std::pow(q, static_cast<double>(x) -
                                            static_cast<double>(p.M))))
      ++x;
    if (delivered && x > 0 &&
        rng.bernoulli(1.0 - std::pow(q, -static_cast<double>(x)))) {
      --x;
      ++y;
    }
  }
  TandemSimResult res;
  res.innovative = y;
  res.epochs = epochs;
  double Re = static_cast<double>(y) / static_cast<double>(epochs);
  res.rate_loss = 1.0 - Re / p.min_cut_rate();
  return res;
}

std::string finmem_isolated_csv(
    const std::vector<std::tuple<std::size_t, unsigned, double, double>>&
        rows) {
  std::ostringstream out;
  out << "M,q,loss,delay\n";
  for (const auto& [M, deg, loss, delay] : rows)
    out << M << "," << (1u << deg) << "," << loss << "," << delay << "\n";
  return out.str();
}

std::string finmem_tandem_csv(
    const std::vector<std::tuple<std::size_t, unsigned, double>>& rows) {
  std::ostringstream out;
  out << "M,q,rate_loss\n";
  for (const auto& [M, deg, loss] : rows)
    out << M << "," << (1u << deg) << "," << loss << "\n";
  return out.str();
}

}  // namespace cpnet
