#pragma once

#include "dbsync/lti.hpp"
#include "dbsync/topology.hpp"
#include "dbsync/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dbsync {

enum class DesignMode { HomogeneousDistributed, HomogeneousGlobal, Heterogeneous };

std::string to_string(DesignMode mode);
DesignMode design_mode_from_string(const std::string& text);

/// Declarative experiment description: models, graph, collection parameters.
/// Parsed from a sectioned key-value text file with row-major bracket matrix
/// literals; see README for the format.
struct ScenarioConfig {
    std::string name = "scenario";
    DesignMode mode = DesignMode::Heterogeneous;
    double duration = 30.0;
    double h = 1e-3;
    double T = 0.37;
    std::uint64_t seed = 1;
    std::optional<int> M;   // data columns per agent; default (n+1)(m+1)+2
    std::optional<int> M0;  // leader data columns; default n0+2

    std::optional<LtiSystem> leader;  // heterogeneous mode only
    std::vector<LtiSystem> agents;    // one entry in homogeneous modes
    Matrix adjacency;
    Vector pinning;

    bool homogeneous() const { return mode != DesignMode::Heterogeneous; }
    int agent_count() const { return static_cast<int>(adjacency.rows()); }
    Topology topology() const { return Topology(adjacency, pinning); }

    // The model of agent i in the network (shared model in homogeneous modes).
    const LtiSystem& agent_model(int i) const;

    int data_columns(const LtiSystem& sys) const;
    int leader_data_columns() const;

    // Shape and mode consistency; throws DimensionError with a diagnostic.
    void validate() const;
};

ScenarioConfig parse_config(std::istream& is);
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config_file(const std::string& path);

/// Bundled demonstration scenario: four vehicle-like agents with different
/// dynamics synchronizing their position outputs to a constant-velocity
/// leader over a four-node directed graph pinned at agent 1.
std::string demo_config_text();
ScenarioConfig demo_scenario();

}  // namespace dbsync
