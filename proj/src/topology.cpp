#include "crsim/topology.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "crsim/parallel.hpp"

namespace crsim {

std::vector<std::size_t> TopologyGraph::neighbors(std::size_t node) const {
  std::vector<std::size_t> out;
  for (const auto& [a, b] : edges) {
    if (a == node) out.push_back(b);
    if (b == node) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

TopologyGraph generate_topology(TopologyKind kind, std::size_t n, std::size_t edge_draws,
                                const CredibilityLedger& ledger, Rng& rng) {
  TopologyGraph g;
  g.kind = kind;
  g.node_count = n;
  if (n == 0) throw Error(Errc::too_small, "team_size", "a graph needs at least one node");
  if (kind == TopologyKind::edgeless) return g;
  if (n < 2) throw Error(Errc::too_small, "team_size", "topology needs at least two agents");

  switch (kind) {
    case TopologyKind::edgeless:
      break;
    case TopologyKind::sia_random: {
      if (edge_draws == 0) throw Error(Errc::invalid_field, "edge_count", "must be positive");
      const std::size_t pairs = n * (n - 1) / 2;
      for (std::size_t d = 0; d < edge_draws; ++d) {
        // Pair number k in row-major order over i < j.
        std::size_t k = rng.below(pairs);
        std::size_t i = 0;
        while (k >= n - 1 - i) {
          k -= n - 1 - i;
          ++i;
        }
        g.edges.emplace(i, i + 1 + k);
      }
      break;
    }
    case TopologyKind::crs_chain: {
      g.path.resize(n);
      std::iota(g.path.begin(), g.path.end(), std::size_t{0});
      std::vector<double> score(n);
      for (std::size_t i = 0; i < n; ++i) score[i] = ledger.crs(i);
      std::stable_sort(g.path.begin(), g.path.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
      for (std::size_t i = 0; i + 1 < n; ++i)
        g.edges.emplace(std::min(g.path[i], g.path[i + 1]), std::max(g.path[i], g.path[i + 1]));
      break;
    }
    case TopologyKind::ring:
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        g.edges.emplace(std::min(i, j), std::max(i, j));
      }
      break;
    case TopologyKind::complete:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g.edges.emplace(i, j);
      break;
  }
  return g;
}

void validate_topology(const TopologyGraph& g) {
  const auto n = g.node_count;
  for (const auto& [a, b] : g.edges) {
    if (a >= b) throw Error(Errc::invalid_field, "edges", "edges must be stored as (i, j) with i < j");
    if (b >= n) throw Error(Errc::invalid_field, "edges", "edge endpoint out of range");
  }
  const auto m = g.edges.size();
  switch (g.kind) {
    case TopologyKind::edgeless:
      if (m != 0) throw Error(Errc::invalid_field, "edges", "edgeless graph has edges");
      break;
    case TopologyKind::sia_random:
      break;
    case TopologyKind::crs_chain: {
      if (m != n - 1 || g.path.size() != n) throw Error(Errc::invalid_field, "edges", "chain must be a path over all nodes");
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const Edge e{std::min(g.path[i], g.path[i + 1]), std::max(g.path[i], g.path[i + 1])};
        if (!g.edges.count(e)) throw Error(Errc::invalid_field, "edges", "chain edge missing");
      }
      break;
    }
    case TopologyKind::ring:
      if (n >= 3 && m != n) throw Error(Errc::invalid_field, "edges", "ring must have N edges");
      for (std::size_t i = 0; i < n; ++i)
        if (g.neighbors(i).size() != std::min<std::size_t>(2, n - 1))
          throw Error(Errc::invalid_field, "edges", "ring node degree must be 2");
      break;
    case TopologyKind::complete:
      if (m != n * (n - 1) / 2) throw Error(Errc::invalid_field, "edges", "complete graph must have N(N-1)/2 edges");
      break;
  }
}

InteractionResult run_interaction(const TopologyGraph& graph, std::span<Agent* const> agents,
                                  std::vector<AgentOutput> initial, std::size_t phases, std::span<Rng> rngs,
                                  const InteractionOptions& options) {
  const auto n = graph.node_count;
  if (agents.size() != n || initial.size() != n || rngs.size() != n)
    throw Error(Errc::invalid_field, "agents", "graph, agents, outputs and streams must have the same size");

  std::vector<std::vector<std::size_t>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) adjacency[i] = graph.neighbors(i);

  std::vector<std::size_t> order = options.evaluation_order;
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }

  InteractionResult result;
  result.outputs = std::move(initial);
  if (graph.edges.empty()) return result;

  for (std::size_t phase = 0; phase < phases; ++phase) {
    std::vector<std::vector<NeighborMessage>> inbox(n);
    for (std::size_t sender = 0; sender < n; ++sender) {
      for (std::size_t receiver : adjacency[sender]) {
        NeighborMessage msg{agents[sender]->id(), agents[receiver]->id(), result.outputs[sender].answer(), phase};
        inbox[receiver].push_back(msg);
        result.messages.push_back(std::move(msg));
      }
    }
    // Inboxes are already in ascending sender order.

    std::vector<AgentOutput> next = result.outputs;
    parallel_for(order.size(), options.jobs, [&](std::size_t k) {
      const std::size_t i = order[k];
      if (inbox[i].empty()) return;
      next[i] = agents[i]->revise(result.outputs[i], inbox[i], rngs[i]);
    });
    result.outputs = std::move(next);
  }
  return result;
}

}  // namespace crsim
