#include "v2sim/ch.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace v2sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

struct WorkArc {
  std::uint32_t node;
  double cost;
  std::int64_t mid;
};

using MinHeap = std::priority_queue<std::pair<double, std::uint32_t>,
                                    std::vector<std::pair<double, std::uint32_t>>,
                                    std::greater<>>;

class Contractor {
 public:
  Contractor(const RoadNetwork& net, const EdgeWeights& w) : n_(net.edge_count()) {
    out_.resize(n_);
    in_.resize(n_);
    contracted_.assign(n_, 0);
    contracted_neighbors_.assign(n_, 0);
    for (EdgeIndex e = 0; e < n_; ++e)
      for (EdgeIndex f : net.successors(e)) add_or_improve(e, f, w.weight(f), -1);
    witness_dist_.assign(n_, kInf);
  }

  void add_or_improve(std::uint32_t u, std::uint32_t v, double cost, std::int64_t mid) {
    if (u == v) return;
    for (auto& a : out_[u]) {
      if (a.node == v) {
        if (cost < a.cost) {
          a.cost = cost;
          a.mid = mid;
          for (auto& b : in_[v])
            if (b.node == u) {
              b.cost = cost;
              b.mid = mid;
            }
        }
        return;
      }
    }
    out_[u].push_back({v, cost, mid});
    in_[v].push_back({u, cost, mid});
  }

  // Shortcuts required to contract v right now.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> shortcuts_for(std::uint32_t v) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> result;
    for (const auto& in : in_[v]) {
      const auto u = in.node;
      if (contracted_[u]) continue;
      double bound = 0.0;
      for (const auto& out : out_[v])
        if (!contracted_[out.node] && out.node != u) bound = std::max(bound, in.cost + out.cost);
      if (bound == 0.0) continue;
      witness(u, v, bound);
      for (const auto& out : out_[v]) {
        const auto w = out.node;
        if (contracted_[w] || w == u) continue;
        const double via = in.cost + out.cost;
        if (witness_dist_[w] > via) result.emplace_back(u, w, via);
      }
    }
    return result;
  }

  int priority(std::uint32_t v) {
    int degree = 0;
    for (const auto& a : in_[v]) degree += !contracted_[a.node];
    for (const auto& a : out_[v]) degree += !contracted_[a.node];
    const int added = static_cast<int>(shortcuts_for(v).size());
    return 2 * (added - degree) + contracted_neighbors_[v];
  }

  void run(std::vector<std::uint32_t>& rank,
           std::vector<std::tuple<std::uint32_t, std::uint32_t, double, std::int64_t>>& final_arcs,
           std::size_t& shortcut_count) {
    using Entry = std::pair<int, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    for (std::uint32_t v = 0; v < n_; ++v) pq.push({priority(v), v});
    rank.assign(n_, 0);
    std::uint32_t next_rank = 0;
    while (!pq.empty()) {
      auto [p, v] = pq.top();
      pq.pop();
      if (contracted_[v]) continue;
      const int fresh = priority(v);
      if (!pq.empty() && fresh > pq.top().first) {
        pq.push({fresh, v});
        continue;
      }
      const auto shortcuts = shortcuts_for(v);
      for (const auto& a : out_[v])
        if (!contracted_[a.node]) final_arcs.emplace_back(v, a.node, a.cost, a.mid);
      for (const auto& a : in_[v])
        if (!contracted_[a.node]) final_arcs.emplace_back(a.node, v, a.cost, a.mid);
      contracted_[v] = 1;
      rank[v] = next_rank++;
      for (const auto& [u, w, c] : shortcuts) {
        add_or_improve(u, w, c, v);
        ++shortcut_count;
      }
      for (const auto& a : in_[v]) ++contracted_neighbors_[a.node];
      for (const auto& a : out_[v]) ++contracted_neighbors_[a.node];
    }
  }

 private:
  // Bounded Dijkstra from u over uncontracted nodes, skipping `avoid`.
  void witness(std::uint32_t u, std::uint32_t avoid, double bound) {
    for (auto t : touched_) witness_dist_[t] = kInf;
    touched_.clear();
    MinHeap pq;
    witness_dist_[u] = 0.0;
    touched_.push_back(u);
    pq.push({0.0, u});
    while (!pq.empty()) {
      auto [d, x] = pq.top();
      pq.pop();
      if (d > witness_dist_[x]) continue;
      if (d > bound) break;
      for (const auto& a : out_[x]) {
        if (contracted_[a.node] || a.node == avoid) continue;
        const double nd = d + a.cost;
        if (nd < witness_dist_[a.node]) {
          if (witness_dist_[a.node] == kInf) touched_.push_back(a.node);
          witness_dist_[a.node] = nd;
          pq.push({nd, a.node});
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::vector<WorkArc>> out_;
  std::vector<std::vector<WorkArc>> in_;
  std::vector<char> contracted_;
  std::vector<int> contracted_neighbors_;
  std::vector<double> witness_dist_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace

ChOverlay ChOverlay::build(const RoadNetwork& net, const EdgeWeights& w) {
  ChOverlay ch;
  Contractor c(net, w);
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double, std::int64_t>> arcs;
  c.run(ch.rank_, arcs, ch.shortcuts_);
  const auto n = net.edge_count();
  ch.up_.resize(n);
  ch.down_.resize(n);
  for (const auto& [u, v, cost, mid] : arcs) {
    if (ch.rank_[u] < ch.rank_[v])
      ch.up_[u].push_back({v, cost, mid});
    else
      ch.down_[v].push_back({u, cost, mid});
  }
  return ch;
}

const ChOverlay::Arc* ChOverlay::find_up(std::uint32_t from, std::uint32_t to) const {
  for (const auto& a : up_[from])
    if (a.to == to) return &a;
  return nullptr;
}

const ChOverlay::Arc* ChOverlay::find_down(std::uint32_t from, std::uint32_t to) const {
  for (const auto& a : down_[to])
    if (a.to == from) return &a;
  return nullptr;
}

void ChOverlay::unpack(std::uint32_t from, std::uint32_t to, std::vector<EdgeIndex>& out) const {
  const Arc* arc = rank_[from] < rank_[to] ? find_up(from, to) : find_down(from, to);
  if (arc == nullptr || arc->mid < 0) {
    out.push_back(to);
    return;
  }
  const auto mid = static_cast<std::uint32_t>(arc->mid);
  unpack(from, mid, out);
  unpack(mid, to, out);
}

std::optional<Route> ChOverlay::query(EdgeIndex origin, EdgeIndex dest) const {
  if (origin == dest) return Route{{origin}, 0.0};
  const auto n = rank_.size();
  std::vector<double> df(n, kInf), db(n, kInf);
  std::vector<std::uint32_t> pf(n, kNoNode), pb(n, kNoNode);
  MinHeap qf, qb;
  df[origin] = 0.0;
  db[dest] = 0.0;
  qf.push({0.0, origin});
  qb.push({0.0, dest});
  double best = kInf;
  std::uint32_t meet = kNoNode;

  auto consider = [&](std::uint32_t x) {
    if (df[x] == kInf || db[x] == kInf) return;
    const double c = df[x] + db[x];
    if (c < best || (c == best && x < meet)) {
      best = c;
      meet = x;
    }
  };

  while (!qf.empty() || !qb.empty()) {
    const bool f_live = !qf.empty() && qf.top().first < best;
    const bool b_live = !qb.empty() && qb.top().first < best;
    if (!f_live && !b_live) break;
    if (f_live) {
      auto [d, x] = qf.top();
      qf.pop();
      if (d <= df[x]) {
        consider(x);
        for (const auto& a : up_[x]) {
          const double nd = d + a.cost;
          if (nd < df[a.to]) {
            df[a.to] = nd;
            pf[a.to] = x;
            qf.push({nd, a.to});
            consider(a.to);
          }
        }
      }
    }
    if (b_live) {
      auto [d, x] = qb.top();
      qb.pop();
      if (d <= db[x]) {
        consider(x);
        for (const auto& a : down_[x]) {
          const double nd = d + a.cost;
          if (nd < db[a.to]) {
            db[a.to] = nd;
            pb[a.to] = x;
            qb.push({nd, a.to});
            consider(a.to);
          }
        }
      }
    }
  }
  if (meet == kNoNode) return std::nullopt;

  std::vector<std::uint32_t> up_chain;
  for (std::uint32_t x = meet; x != kNoNode; x = pf[x]) up_chain.push_back(x);
  std::reverse(up_chain.begin(), up_chain.end());
  std::vector<std::uint32_t> nodes = up_chain;
  for (std::uint32_t x = pb[meet]; x != kNoNode; x = pb[x]) nodes.push_back(x);

  Route r;
  r.cost = best;
  r.edges.push_back(nodes.front());
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) unpack(nodes[i], nodes[i + 1], r.edges);
  return r;
}

}  // namespace v2sim
