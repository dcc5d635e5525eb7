#pragma once

// Cantor-like decomposition of the dyadic blocks [2^k, 2^{k+1}) into islands
// and gaps.
//
// Block k starts with a left gap of length 2^{e+b}, e = [eps k], b = [beta k].
// The remainder is split b times: at level l every current interval receives a
// middle gap of length 2^{e+b-l-1}, the left part taking the floor and the
// right part the ceiling of what is left. The 2^b final intervals are the
// islands. Segment pairs (J_{k,j}, I_{k,j}) are numbered j = 1..2^b from left
// to right, J_{k,1} being the left gap.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wiplab/error.hpp"

namespace wiplab {

enum class SegmentKind { gap, island };

inline const char* to_string(SegmentKind kind) { return kind == SegmentKind::gap ? "gap" : "island"; }

/// Half-open index range [start, end).
struct Segment {
  SegmentKind kind = SegmentKind::gap;
  int k = 0;
  long long j = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - start; }
  bool contains(std::int64_t i) const { return start <= i && i < end; }
};

struct Block {
  int k = 0;
  int e = 0;  // [eps k]
  int b = 0;  // [beta k]
  std::vector<Segment> segments;  // J_{k,1}, I_{k,1}, J_{k,2}, I_{k,2}, ...

  std::int64_t count() const { return static_cast<std::int64_t>(segments.size() / 2); }
  const Segment& gap(std::int64_t j) const { return segments[static_cast<std::size_t>(2 * (j - 1))]; }
  const Segment& island(std::int64_t j) const { return segments[static_cast<std::size_t>(2 * (j - 1) + 1)]; }

  std::int64_t gap_total() const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < segments.size(); i += 2) s += segments[i].length();
    return s;
  }
  std::int64_t island_total() const {
    std::int64_t s = 0;
    for (std::size_t i = 1; i < segments.size(); i += 2) s += segments[i].length();
    return s;
  }
};

// floor with a small guard so that e.g. 0.6 * 5 = 2.9999999999999996 maps to 3
inline int scaled_floor(double x, int k) { return static_cast<int>(std::floor(x * k + 1e-9)); }

inline void check_partition_params(double epsilon, double beta) {
  require(epsilon > 0.0 && epsilon < 1.0, "partition: epsilon must lie in (0, 1)");
  require(beta > 0.0 && beta < 1.0, "partition: beta must lie in (0, 1)");
  require(epsilon + beta < 1.0, "partition: epsilon + beta must be < 1");
}

inline Block build_block(int k, double epsilon, double beta) {
  check_partition_params(epsilon, beta);
  require(k >= 1 && k <= 62, "build_block: k must lie in [1, 62]");
  Block block;
  block.k = k;
  block.e = scaled_floor(epsilon, k);
  block.b = scaled_floor(beta, k);
  const std::int64_t lo = std::int64_t{1} << k;
  const std::int64_t hi = lo << 1;
  const std::int64_t left_gap = std::int64_t{1} << (block.e + block.b);
  if (left_gap >= lo) {
    throw PreconditionError("build_block: block too small: block " + std::to_string(k) +
                            " cannot host its left gap of length " + std::to_string(left_gap));
  }

  struct Piece {
    std::int64_t start, end;
  };
  std::vector<Piece> current{{lo + left_gap, hi}};
  // middle[i] is the gap that follows current[i] once the level is processed
  std::vector<Piece> gaps;
  for (int l = 0; l < block.b; ++l) {
    const std::int64_t g = std::int64_t{1} << (block.e + block.b - l - 1);
    std::vector<Piece> next;
    std::vector<Piece> next_gaps;
    next.reserve(current.size() * 2);
    for (std::size_t i = 0; i < current.size(); ++i) {
      const auto [s, t] = current[i];
      const std::int64_t rest = (t - s) - g;
      if (rest < 2) {
        throw PreconditionError("build_block: block too small: block " + std::to_string(k) +
                                " cannot host a gap of length " + std::to_string(g) + " at level " +
                                std::to_string(l));
      }
      const std::int64_t left = rest / 2;
      next.push_back({s, s + left});
      next_gaps.push_back({s + left, s + left + g});
      next.push_back({s + left + g, t});
      if (i < gaps.size()) next_gaps.push_back(gaps[i]);
    }
    current = std::move(next);
    gaps = std::move(next_gaps);
  }

  block.segments.reserve(current.size() * 2);
  for (std::size_t i = 0; i < current.size(); ++i) {
    const auto j = static_cast<long long>(i + 1);
    if (i == 0) {
      block.segments.push_back({SegmentKind::gap, k, j, lo, lo + left_gap});
    } else {
      block.segments.push_back({SegmentKind::gap, k, j, gaps[i - 1].start, gaps[i - 1].end});
    }
    block.segments.push_back({SegmentKind::island, k, j, current[i].start, current[i].end});
  }
  return block;
}

/// True when build_block(k, epsilon, beta) succeeds.
inline bool block_feasible(int k, double epsilon, double beta) {
  try {
    build_block(k, epsilon, beta);
    return true;
  } catch (const PreconditionError&) {
    return false;
  }
}

/// (2 + b) 2^{e+b-1}: total gap length of block k.
inline double gap_total_formula(int k, double epsilon, double beta) {
  const int e = scaled_floor(epsilon, k);
  const int b = scaled_floor(beta, k);
  return (2.0 + b) * std::ldexp(1.0, e + b - 1);
}

/// 2^{k-b} - (1 + b 2^{e-1}): the published island length.
inline double island_length_published(int k, double epsilon, double beta) {
  const int e = scaled_floor(epsilon, k);
  const int b = scaled_floor(beta, k);
  return std::ldexp(1.0, k - b) - (1.0 + b * std::ldexp(1.0, e - 1));
}

/// 2^{k-b} - 2^e - b 2^{e-1}: island length implied by the gap accounting
/// whenever all islands have equal length.
inline double island_length_accounting(int k, double epsilon, double beta) {
  const int e = scaled_floor(epsilon, k);
  const int b = scaled_floor(beta, k);
  return std::ldexp(1.0, k - b) - std::ldexp(1.0, e) - b * std::ldexp(1.0, e - 1);
}

struct Locator {
  int n = 0;
  long long m = 0;
  SegmentKind kind = SegmentKind::gap;  // which half of the pair holds N
};

class BlockPartition {
 public:
  /// Blocks k0..n with n = floor(log2 N).
  BlockPartition(std::int64_t N, double epsilon, double beta, int k0 = 4)
      : N_(N), epsilon_(epsilon), beta_(beta), k0_(k0) {
    check_partition_params(epsilon, beta);
    require(k0 >= 1 && k0 <= 40, "partition: k0 must lie in [1, 40]");
    if (N < (std::int64_t{1} << k0)) {
      throw PreconditionError("partition: N = " + std::to_string(N) + " is below 2^k0 = " +
                              std::to_string(std::int64_t{1} << k0));
    }
    n_ = 0;
    while ((std::int64_t{1} << (n_ + 1)) <= N) ++n_;
    for (int k = k0; k <= n_; ++k) blocks_.push_back(build_block(k, epsilon, beta));
    const Block& top = blocks_.back();
    for (const auto& seg : top.segments) {
      if (seg.contains(N)) {
        locator_ = {n_, seg.j, seg.kind};
        break;
      }
    }
  }

  std::int64_t N() const { return N_; }
  double epsilon() const { return epsilon_; }
  double beta() const { return beta_; }
  int k0() const { return k0_; }
  int n() const { return n_; }
  const Locator& locator() const { return locator_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(int k) const {
    require(k >= k0_ && k <= n_, "partition: block index out of range");
    return blocks_[static_cast<std::size_t>(k - k0_)];
  }

  /// Pairs (k, j) of K_N in lexicographic order.
  std::vector<std::pair<int, long long>> index_set() const {
    std::vector<std::pair<int, long long>> out;
    for (const auto& blk : blocks_) {
      const long long last = blk.k == n_ ? locator_.m : blk.count();
      for (long long j = 1; j <= last; ++j) out.emplace_back(blk.k, j);
    }
    return out;
  }

  /// Islands I_{k,j}, (k, j) in K_N, clipped to indices <= N. Islands that
  /// start after N (possible only for the pair holding N) are dropped.
  std::vector<Segment> islands() const {
    std::vector<Segment> out;
    for (const auto& [k, j] : index_set()) {
      Segment s = block(k).island(j);
      if (s.start > N_) continue;
      s.end = std::min<std::int64_t>(s.end, N_ + 1);
      out.push_back(s);
    }
    return out;
  }

  /// All segments of blocks k0..n, unclipped.
  std::vector<Segment> segments() const {
    std::vector<Segment> out;
    for (const auto& blk : blocks_) out.insert(out.end(), blk.segments.begin(), blk.segments.end());
    return out;
  }

 private:
  std::int64_t N_;
  double epsilon_;
  double beta_;
  int k0_;
  int n_ = 0;
  std::vector<Block> blocks_;
  Locator locator_;
};

/// (1 + alpha) / (1 + 2 alpha).
inline double optimal_beta(double alpha) {
  require(alpha > 0.0, "optimal_beta: alpha must be > 0");
  return (1.0 + alpha) / (1.0 + 2.0 * alpha);
}

/// alpha (1 + alpha) / ((3 + 2 alpha)(1 + 2 alpha)).
inline double theoretical_rate(double alpha) {
  require(alpha > 0.0, "theoretical_rate: alpha must be > 0");
  return alpha * (1.0 + alpha) / ((3.0 + 2.0 * alpha) * (1.0 + 2.0 * alpha));
}

/// Rate alpha / (3 + 2 alpha) of the independent case.
inline double independent_rate(double alpha) {
  require(alpha > 0.0, "independent_rate: alpha must be > 0");
  return alpha / (3.0 + 2.0 * alpha);
}

}  // namespace wiplab
