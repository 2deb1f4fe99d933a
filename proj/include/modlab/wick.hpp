#pragma once

// Symbolic ladder-operator algebra over a finite set of registered channels.
// Commutators of unlike kinds are the scalars supplied by the shell kernel:
// [a_i, a_j^dag] = (c_i, c_j)_K, like kinds commute. Normal ordering moves
// every raising operator left of every lowering operator; vacuum expectation
// values read off the identity coefficient, and an independent pairing-sum
// oracle cross-checks them.

#include <json.hpp>

#include "modlab/kernel.hpp"

namespace modlab {

using ChannelId = std::uint32_t;

struct LadderOp {
  enum class Kind : std::uint8_t { lower = 0, raise = 1 };
  Kind kind = Kind::lower;
  ChannelId channel = 0;

  bool operator==(const LadderOp&) const = default;
  auto operator<=>(const LadderOp&) const = default;
};

struct Monomial {
  Complex coeff{0.0, 0.0};
  std::vector<LadderOp> ops;
};

class OperatorPolynomial {
 public:
  using Terms = std::map<std::vector<LadderOp>, Complex>;

  OperatorPolynomial() = default;
  static OperatorPolynomial scalar(Complex c) {
    OperatorPolynomial p;
    p.add({}, c);
    return p;
  }
  static OperatorPolynomial single(LadderOp op, Complex c = {1.0, 0.0}) {
    OperatorPolynomial p;
    p.add({op}, c);
    return p;
  }

  const Terms& terms() const { return terms_; }
  bool zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  int degree() const {
    std::size_t d = 0;
    for (const auto& [ops, c] : terms_) d = std::max(d, ops.size());
    return static_cast<int>(d);
  }

  void add(std::vector<LadderOp> ops, Complex c) {
    if (c == Complex{0.0, 0.0}) return;
    auto [it, fresh] = terms_.emplace(std::move(ops), c);
    if (!fresh) {
      it->second += c;
      if (it->second == Complex{0.0, 0.0}) terms_.erase(it);
    }
  }

  Complex coefficient(const std::vector<LadderOp>& ops) const {
    auto it = terms_.find(ops);
    return it == terms_.end() ? Complex{0.0, 0.0} : it->second;
  }

  OperatorPolynomial& operator+=(const OperatorPolynomial& o) {
    for (const auto& [ops, c] : o.terms_) add(ops, c);
    return *this;
  }
  OperatorPolynomial& operator-=(const OperatorPolynomial& o) {
    for (const auto& [ops, c] : o.terms_) add(ops, -c);
    return *this;
  }
  OperatorPolynomial& operator*=(Complex s) {
    if (s == Complex{0.0, 0.0}) {
      terms_.clear();
      return *this;
    }
    for (auto& [ops, c] : terms_) c *= s;
    return *this;
  }
  friend OperatorPolynomial operator+(OperatorPolynomial a, const OperatorPolynomial& b) {
    a += b;
    return a;
  }
  friend OperatorPolynomial operator-(OperatorPolynomial a, const OperatorPolynomial& b) {
    a -= b;
    return a;
  }
  friend OperatorPolynomial operator*(Complex s, OperatorPolynomial p) {
    p *= s;
    return p;
  }

  bool operator==(const OperatorPolynomial& o) const { return terms_ == o.terms_; }

  double max_coeff() const {
    double m = 0.0;
    for (const auto& [ops, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

 private:
  Terms terms_;
};

// Max |coefficient difference|; the symbolic closeness measure for tests.
inline double poly_distance(const OperatorPolynomial& a, const OperatorPolynomial& b) {
  double d = 0.0;
  for (const auto& [ops, c] : a.terms()) d = std::max(d, std::abs(c - b.coefficient(ops)));
  for (const auto& [ops, c] : b.terms()) d = std::max(d, std::abs(c - a.coefficient(ops)));
  return d;
}

// ---------------------------------------------------------------------------
// Context: registered channels + cached scalar commutators.

class KernelContext {
 public:
  KernelContext(KernelSpec kernel, GridSpec grid, double hbar = 1.0, int degree_cap = 16)
      : kernel_(std::move(kernel)), engine_(std::move(grid), hbar), degree_cap_(degree_cap) {
    kernel_.validate();
  }

  ChannelId register_channel(const Channel& c) {
    const std::string key = channel_key(c);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    if (frozen_)
      throw InvariantViolation("KernelContext: cannot register channels after freeze");
    channels_.push_back(c);
    ChannelId id = static_cast<ChannelId>(channels_.size() - 1);
    index_.emplace(key, id);
    return id;
  }

  const Channel& channel(ChannelId id) const {
    if (id >= channels_.size()) throw UnregisteredChannel("channel id out of range");
    return channels_[id];
  }
  std::size_t channel_count() const { return channels_.size(); }
  const KernelSpec& kernel() const { return kernel_; }
  const GridSpec& grid() const { return engine_.grid(); }
  double hbar() const { return engine_.hbar(); }
  int degree_cap() const { return degree_cap_; }

  // Populate the full commutator cache and lock registration.
  void freeze() {
    const std::size_t n = channels_.size();
    gram_.assign(n * n, Complex{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        gram_[i * n + j] = engine_.kernel_inner(channels_[i], channels_[j], kernel_).value;
    frozen_ = true;
  }
  bool frozen() const { return frozen_; }

  // [a_i, a_j^dag]
  Complex gram(ChannelId i, ChannelId j) const {
    if (!frozen_) throw InvariantViolation("KernelContext: freeze() before algebra");
    return gram_[static_cast<std::size_t>(i) * channels_.size() + j];
  }

 private:
  KernelSpec kernel_;
  mutable ShellEngine engine_;
  std::vector<Channel> channels_;
  std::map<std::string, ChannelId> index_;
  std::vector<Complex> gram_;
  int degree_cap_;
  bool frozen_ = false;
};

// ---------------------------------------------------------------------------
// Field construction and algebra operations.

inline OperatorPolynomial lowering(ChannelId id) {
  return OperatorPolynomial::single({LadderOp::Kind::lower, id});
}
inline OperatorPolynomial raising(ChannelId id) {
  return OperatorPolynomial::single({LadderOp::Kind::raise, id});
}

// xi_c = a_{c*} + a_c^dag; registers both c and its conjugate.
inline OperatorPolynomial make_field(KernelContext& ctx, const Channel& c) {
  ChannelId conj_id = ctx.register_channel(c.conjugated());
  ChannelId id = ctx.register_channel(c);
  OperatorPolynomial p;
  p.add({{LadderOp::Kind::lower, conj_id}}, {1.0, 0.0});
  p.add({{LadderOp::Kind::raise, id}}, {1.0, 0.0});
  return p;
}

inline OperatorPolynomial adjoint(const OperatorPolynomial& p) {
  OperatorPolynomial out;
  for (const auto& [ops, c] : p.terms()) {
    std::vector<LadderOp> rev(ops.rbegin(), ops.rend());
    for (auto& op : rev)
      op.kind = op.kind == LadderOp::Kind::lower ? LadderOp::Kind::raise : LadderOp::Kind::lower;
    out.add(std::move(rev), std::conj(c));
  }
  return out;
}

inline OperatorPolynomial multiply(const OperatorPolynomial& p, const OperatorPolynomial& q,
                                   const KernelContext& ctx) {
  OperatorPolynomial out;
  for (const auto& [aops, ac] : p.terms())
    for (const auto& [bops, bc] : q.terms()) {
      if (static_cast<int>(aops.size() + bops.size()) > ctx.degree_cap())
        throw DegreeOverflow("operator product exceeds the degree cap " +
                             std::to_string(ctx.degree_cap()));
      std::vector<LadderOp> ops = aops;
      ops.insert(ops.end(), bops.begin(), bops.end());
      out.add(std::move(ops), ac * bc);
    }
  return out;
}

namespace detail {

// Memoized normal form of a single word: rewriting the first (lower, raise)
// adjacency as a b^dag = b^dag a + G(a,b) shares all intermediate words, so
// the cost is polynomial in the number of distinct reachable words.
class NormalOrderer {
 public:
  explicit NormalOrderer(const KernelContext& ctx) : ctx_(ctx) {}

  const OperatorPolynomial& normal_form(const std::vector<LadderOp>& word) {
    auto it = memo_.find(word);
    if (it != memo_.end()) return it->second;
    OperatorPolynomial result;
    bool rewritten = false;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      if (word[i].kind == LadderOp::Kind::lower && word[i + 1].kind == LadderOp::Kind::raise) {
        std::vector<LadderOp> swapped = word;
        std::swap(swapped[i], swapped[i + 1]);
        result = normal_form(swapped);
        Complex g = ctx_.gram(word[i].channel, word[i + 1].channel);
        if (g != Complex{0.0, 0.0}) {
          std::vector<LadderOp> contracted;
          contracted.reserve(word.size() - 2);
          contracted.insert(contracted.end(), word.begin(), word.begin() + static_cast<std::ptrdiff_t>(i));
          contracted.insert(contracted.end(), word.begin() + static_cast<std::ptrdiff_t>(i) + 2, word.end());
          OperatorPolynomial tail = normal_form(contracted);
          tail *= g;
          result += tail;
        }
        rewritten = true;
        break;
      }
    }
    if (!rewritten) {
      // canonical block order: like-kind operators commute exactly
      std::vector<LadderOp> sorted = word;
      auto mid = std::find_if(sorted.begin(), sorted.end(),
                              [](const LadderOp& o) { return o.kind == LadderOp::Kind::lower; });
      std::sort(sorted.begin(), mid);
      std::sort(mid, sorted.end());
      result.add(std::move(sorted), {1.0, 0.0});
    }
    return memo_.emplace(word, std::move(result)).first->second;
  }

 private:
  const KernelContext& ctx_;
  std::map<std::vector<LadderOp>, OperatorPolynomial> memo_;
};

}  // namespace detail

inline OperatorPolynomial normal_order(const OperatorPolynomial& p, const KernelContext& ctx) {
  detail::NormalOrderer orderer(ctx);
  OperatorPolynomial out;
  for (const auto& [ops, c] : p.terms()) {
    OperatorPolynomial nf = orderer.normal_form(ops);
    nf *= c;
    out += nf;
  }
  return out;
}

// Since every commutator of generators is a scalar, [w, v] expands exactly as
// the double contraction sum
//   [w, v] = sum_{k,j} [w_k, v_j] * w_1..w_{k-1} (v without v_j) w_{k+1}..w_m,
// which never produces the top-degree words of wv - vw. Exact zeros (the
// selection rule, trivial deformations) therefore stay exact zeros.
inline OperatorPolynomial commutator(const OperatorPolynomial& p, const OperatorPolynomial& q,
                                     const KernelContext& ctx) {
  OperatorPolynomial out;
  for (const auto& [w, cw] : p.terms())
    for (const auto& [v, cv] : q.terms()) {
      if (w.size() + v.size() > static_cast<std::size_t>(ctx.degree_cap()) + 2)
        throw DegreeOverflow("commutator exceeds the degree cap " +
                             std::to_string(ctx.degree_cap()));
      const Complex cc = cw * cv;
      for (std::size_t k = 0; k < w.size(); ++k)
        for (std::size_t j = 0; j < v.size(); ++j) {
          if (w[k].kind == v[j].kind) continue;
          Complex g = w[k].kind == LadderOp::Kind::lower
                          ? ctx.gram(w[k].channel, v[j].channel)
                          : -ctx.gram(v[j].channel, w[k].channel);
          if (g == Complex{0.0, 0.0}) continue;
          std::vector<LadderOp> word;
          word.reserve(w.size() + v.size() - 2);
          word.insert(word.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k));
          word.insert(word.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(j));
          word.insert(word.end(), v.begin() + static_cast<std::ptrdiff_t>(j) + 1, v.end());
          word.insert(word.end(), w.begin() + static_cast<std::ptrdiff_t>(k) + 1, w.end());
          out.add(std::move(word), cc * g);
        }
    }
  return normal_order(out, ctx);
}

inline Complex vev(const OperatorPolynomial& p, const KernelContext& ctx) {
  return normal_order(p, ctx).coefficient({});
}

// Independent oracle: sum over complete pairings of each lowering operator
// with a raising operator to its right; unmatched operators kill the term.
namespace detail {
inline Complex pairing_sum(std::vector<LadderOp> ops, const KernelContext& ctx) {
  if (ops.empty()) return {1.0, 0.0};
  if (ops.front().kind == LadderOp::Kind::raise) return {0.0, 0.0};
  Complex acc{0.0, 0.0};
  for (std::size_t j = 1; j < ops.size(); ++j) {
    if (ops[j].kind != LadderOp::Kind::raise) continue;
    Complex g = ctx.gram(ops.front().channel, ops[j].channel);
    if (g == Complex{0.0, 0.0}) continue;
    std::vector<LadderOp> rest;
    rest.reserve(ops.size() - 2);
    rest.insert(rest.end(), ops.begin() + 1, ops.begin() + static_cast<std::ptrdiff_t>(j));
    rest.insert(rest.end(), ops.begin() + static_cast<std::ptrdiff_t>(j) + 1, ops.end());
    acc += g * pairing_sum(std::move(rest), ctx);
  }
  return acc;
}
}  // namespace detail

inline Complex vev_pairing_oracle(const OperatorPolynomial& p, const KernelContext& ctx) {
  Complex acc{0.0, 0.0};
  for (const auto& [ops, c] : p.terms()) {
    if (ops.size() % 2 != 0) continue;
    acc += c * detail::pairing_sum(ops, ctx);
  }
  return acc;
}

// <V| adjoint(P) Q |V> without forming the degree-doubled product: only the
// pure-raise words of P and Q survive against the vacuum, and each pair
// contributes the complete pairing sum of the corresponding mixed word.
inline Complex vacuum_overlap(const OperatorPolynomial& p_in, const OperatorPolynomial& q_in,
                              const KernelContext& ctx) {
  auto pure_raise = [](const std::vector<LadderOp>& ops) {
    for (const auto& o : ops)
      if (o.kind == LadderOp::Kind::lower) return false;
    return true;
  };
  // the projection is valid on normal forms only; cheap for already-normal input
  OperatorPolynomial p = normal_order(p_in, ctx);
  OperatorPolynomial q = normal_order(q_in, ctx);
  Complex acc{0.0, 0.0};
  for (const auto& [w1, c1] : p.terms()) {
    if (!pure_raise(w1)) continue;
    for (const auto& [w2, c2] : q.terms()) {
      if (w2.size() != w1.size() || !pure_raise(w2)) continue;
      std::vector<LadderOp> word;
      word.reserve(2 * w1.size());
      for (auto it = w1.rbegin(); it != w1.rend(); ++it)
        word.push_back({LadderOp::Kind::lower, it->channel});
      word.insert(word.end(), w2.begin(), w2.end());
      acc += std::conj(c1) * c2 * detail::pairing_sum(std::move(word), ctx);
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// JSON form for golden files: [{coeff:[re,im], ops:[{kind,channel_id},...]},...]

inline nlohmann::json to_json(const OperatorPolynomial& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [ops, c] : p.terms()) {
    nlohmann::json term;
    term["coeff"] = {c.real(), c.imag()};
    nlohmann::json jops = nlohmann::json::array();
    for (const auto& op : ops)
      jops.push_back({{"kind", op.kind == LadderOp::Kind::lower ? "lower" : "raise"},
                      {"channel_id", op.channel}});
    term["ops"] = std::move(jops);
    arr.push_back(std::move(term));
  }
  return arr;
}

inline OperatorPolynomial polynomial_from_json(const nlohmann::json& arr) {
  OperatorPolynomial p;
  for (const auto& term : arr) {
    std::vector<LadderOp> ops;
    for (const auto& jop : term.at("ops")) {
      LadderOp op;
      op.kind = jop.at("kind").get<std::string>() == "lower" ? LadderOp::Kind::lower
                                                             : LadderOp::Kind::raise;
      op.channel = jop.at("channel_id").get<ChannelId>();
      ops.push_back(op);
    }
    const auto& c = term.at("coeff");
    p.add(std::move(ops), Complex{c.at(0).get<double>(), c.at(1).get<double>()});
  }
  return p;
}

}  // namespace modlab
