// Communication graphs and the synchronous peer-interaction executor.

#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "crsim/agents.hpp"
#include "crsim/ledger.hpp"
#include "crsim/rng.hpp"

namespace crsim {

inline constexpr std::size_t kMaxInteractionPhases = 8;

using Edge = std::pair<std::size_t, std::size_t>;  // first < second

struct TopologyGraph {
  TopologyKind kind = TopologyKind::edgeless;
  std::size_t node_count = 0;
  std::set<Edge> edges;
  // Visiting order of the path for crs-chain graphs; empty otherwise.
  std::vector<std::size_t> path;

  /// Neighbor indices of `node` in ascending order.
  std::vector<std::size_t> neighbors(std::size_t node) const;
  std::size_t edge_count() const noexcept { return edges.size(); }

  friend bool operator==(const TopologyGraph&, const TopologyGraph&) = default;
};

/// Build the communication graph for one round.
///
/// sia-random draws `edge_draws` pairs uniformly with replacement from the
/// N-choose-2 pair set and keeps the distinct ones, so the realized edge count
/// can fall below `edge_draws`. crs-chain links agents in descending
/// credibility order, ties broken by ascending index.
///
/// Throws Error(too_small) for N < 2, Error(invalid_field) for sia-random with
/// zero draws, Error(missing_crs) when the chain needs a score the ledger lacks.
TopologyGraph generate_topology(TopologyKind kind, std::size_t node_count, std::size_t edge_draws,
                                const CredibilityLedger& ledger, Rng& rng);

/// Throws Error(invalid_field) when the graph breaks its kind's shape invariant.
void validate_topology(const TopologyGraph& graph);

struct InteractionOptions {
  unsigned jobs = 1;
  // Order in which revise calls are issued inside a phase; empty means
  // ascending index. Results never depend on it.
  std::vector<std::size_t> evaluation_order;
};

struct InteractionResult {
  std::vector<AgentOutput> outputs;
  std::vector<NeighborMessage> messages;  // ordered by (phase, sender, receiver)
};

/// Run `phases` synchronous exchange rounds. In each phase every agent with at
/// least one neighbor receives all neighbors' answers from the previous phase
/// and revises once; agents without neighbors are left untouched.
///
/// `rngs[i]` is agent i's private stream. Throws Error(invalid_field) when the
/// sizes of graph, agents, outputs and streams disagree.
InteractionResult run_interaction(const TopologyGraph& graph, std::span<Agent* const> agents,
                                  std::vector<AgentOutput> initial, std::size_t phases, std::span<Rng> rngs,
                                  const InteractionOptions& options = {});

}  // namespace crsim
