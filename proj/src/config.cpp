#include "dbsync/config.hpp"

#include "dbsync/linalg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace dbsync {

std::string to_string(DesignMode mode) {
    switch (mode) {
        case DesignMode::HomogeneousDistributed: return "homogeneous-distributed";
        case DesignMode::HomogeneousGlobal: return "homogeneous-global";
        case DesignMode::Heterogeneous: return "heterogeneous";
    }
    return "unknown";
}

DesignMode design_mode_from_string(const std::string& text) {
    if (text == "homogeneous-distributed") return DesignMode::HomogeneousDistributed;
    if (text == "homogeneous-global") return DesignMode::HomogeneousGlobal;
    if (text == "heterogeneous") return DesignMode::Heterogeneous;
    throw DimensionError("config: unknown mode '" + text + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string strip_spaces(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}

double parse_number(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DimensionError("config: cannot parse number '" + text + "' for " + what);
    }
}

// Row-major bracket literal: [[a,b],[c,d]] or a single row [a,b,c].
Matrix parse_matrix_literal(const std::string& raw, const std::string& what) {
    const std::string s = strip_spaces(raw);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw DimensionError("config: matrix literal for " + what + " must be bracketed");
    std::vector<std::vector<double>> rows;
    auto parse_row = [&](const std::string& body) {
        std::vector<double> row;
        std::stringstream ss(body);
        std::string field;
        while (std::getline(ss, field, ','))
            row.push_back(parse_number(field, what));
        return row;
    };
    if (s[1] == '[') {
        std::size_t i = 1;
        while (i < s.size() - 1) {
            if (s[i] == ',') { ++i; continue; }
            if (s[i] != '[')
                throw DimensionError("config: malformed matrix literal for " + what);
            const std::size_t close = s.find(']', i);
            if (close == std::string::npos)
                throw DimensionError("config: unbalanced brackets in " + what);
            rows.push_back(parse_row(s.substr(i + 1, close - i - 1)));
            i = close + 1;
        }
    } else {
        rows.push_back(parse_row(s.substr(1, s.size() - 2)));
    }
    if (rows.empty() || rows.front().empty())
        throw DimensionError("config: empty matrix literal for " + what);
    const std::size_t cols = rows.front().size();
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols)
            throw DimensionError("config: ragged matrix literal for " + what);
        for (std::size_t j = 0; j < cols; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return out;
}

struct RawSystem {
    std::optional<Matrix> A, B, C;
};

struct EdgeSpec {
    int from = 0, to = 0;
    double weight = 0.0;
};

LtiSystem build_system(const RawSystem& raw, const std::string& who, bool autonomous_ok) {
    if (!raw.A) throw DimensionError("config: " + who + " needs an A matrix");
    const Eigen::Index n = raw.A->rows();
    Matrix B = raw.B.value_or(Matrix(n, 0));
    if (!raw.B && !autonomous_ok)
        throw DimensionError("config: " + who + " needs a B matrix");
    Matrix C = raw.C.value_or(Matrix::Identity(n, n));
    return LtiSystem(*raw.A, std::move(B), std::move(C));
}

}  // namespace

const LtiSystem& ScenarioConfig::agent_model(int i) const {
    if (homogeneous()) return agents.front();
    return agents.at(static_cast<std::size_t>(i));
}

int ScenarioConfig::data_columns(const LtiSystem& sys) const {
    if (M) return *M;
    return (sys.n() + 1) * (sys.m() + 1) + 2;
}

int ScenarioConfig::leader_data_columns() const {
    if (M0) return *M0;
    if (!leader) throw DimensionError("config: leader model missing");
    return leader->n() + 2;
}

void ScenarioConfig::validate() const {
    if (!(h > 0.0)) throw DimensionError("config: h must be > 0");
    if (!(T > 0.0)) throw DimensionError("config: T must be > 0");
    if (!(duration > 0.0)) throw DimensionError("config: duration must be > 0");
    grid_index(T, h, "config: T");
    grid_index(duration, h, "config: duration");
    if (agents.empty()) throw DimensionError("config: no agent models given");
    const int N = agent_count();
    if (N < 1) throw DimensionError("config: graph section missing or empty");
    Topology(adjacency, pinning);  // shape and sign checks

    if (homogeneous()) {
        if (agents.size() != 1)
            throw DimensionError("config: homogeneous modes take a single [agent] section");
        if (leader)
            throw DimensionError("config: leader section is only used in heterogeneous mode");
        if (agents.front().m() < 1)
            throw DimensionError("config: the shared agent model needs at least one input");
    } else {
        if (!leader) throw DimensionError("config: heterogeneous mode needs a [leader] section");
        if (static_cast<int>(agents.size()) != N)
            throw DimensionError("config: expected " + std::to_string(N) + " [agent i] sections, got " +
                                 std::to_string(agents.size()));
        for (std::size_t i = 0; i < agents.size(); ++i) {
            if (agents[i].m() < 1)
                throw DimensionError("config: agent " + std::to_string(i + 1) +
                                     " needs at least one input");
            if (agents[i].p() != leader->p())
                throw DimensionError("config: agent " + std::to_string(i + 1) +
                                     " output dimension differs from the leader");
        }
        if (leader->m() != 0)
            throw DimensionError("config: the leader must be autonomous (no B matrix)");
    }
}

ScenarioConfig parse_config(std::istream& is) {
    ScenarioConfig cfg;
    std::map<int, RawSystem> raw_agents;  // index 0 = unindexed [agent]
    RawSystem raw_leader;
    bool saw_leader = false;
    std::vector<EdgeSpec> edges;
    std::vector<std::pair<int, double>> pins;
    int declared_agents = 0;

    enum class Section { None, Scenario, Data, Leader, Agent, Graph };
    Section section = Section::None;
    int agent_index = 0;

    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = " (line " + std::to_string(line_no) + ")";

        if (line.front() == '[' && line.back() == ']' &&
            line.find(',') == std::string::npos && line.find("[[", 0) != 0) {
            const std::string header = trim(line.substr(1, line.size() - 2));
            std::istringstream hs(header);
            std::string word;
            hs >> word;
            if (word == "scenario") section = Section::Scenario;
            else if (word == "data") section = Section::Data;
            else if (word == "leader") { section = Section::Leader; saw_leader = true; }
            else if (word == "agent") {
                section = Section::Agent;
                agent_index = 0;
                hs >> agent_index;
                if (raw_agents.count(agent_index))
                    throw DimensionError("config: duplicate agent section" + where);
            } else if (word == "graph") section = Section::Graph;
            else throw DimensionError("config: unknown section [" + header + "]" + where);
            continue;
        }

        if (section == Section::Graph) {
            std::istringstream ls(line);
            std::string word;
            ls >> word;
            if (word == "edge") {
                EdgeSpec e;
                std::string arrow, colon;
                ls >> e.from >> arrow >> e.to >> colon >> e.weight;
                if (!ls || arrow != "->" || colon != ":")
                    throw DimensionError("config: malformed edge line" + where);
                edges.push_back(e);
                continue;
            }
            if (word == "pin") {
                int agent = 0;
                double gain = 0.0;
                std::string colon;
                ls >> agent >> colon >> gain;
                if (!ls || colon != ":")
                    throw DimensionError("config: malformed pin line" + where);
                pins.emplace_back(agent, gain);
                continue;
            }
            // fall through to key = value for "agents = N"
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DimensionError("config: expected key = value" + where);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        switch (section) {
            case Section::Scenario:
                if (key == "mode") cfg.mode = design_mode_from_string(value);
                else if (key == "duration") cfg.duration = parse_number(value, key);
                else if (key == "h") cfg.h = parse_number(value, key);
                else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_number(value, key));
                else if (key == "name") cfg.name = value;
                else throw DimensionError("config: unknown scenario key '" + key + "'" + where);
                break;
            case Section::Data:
                if (key == "T") cfg.T = parse_number(value, key);
                else if (key == "M") cfg.M = static_cast<int>(parse_number(value, key));
                else if (key == "M0") cfg.M0 = static_cast<int>(parse_number(value, key));
                else throw DimensionError("config: unknown data key '" + key + "'" + where);
                break;
            case Section::Leader:
            case Section::Agent: {
                RawSystem& raw =
                    section == Section::Leader ? raw_leader : raw_agents[agent_index];
                if (key == "A") raw.A = parse_matrix_literal(value, key);
                else if (key == "B") raw.B = parse_matrix_literal(value, key);
                else if (key == "C") raw.C = parse_matrix_literal(value, key);
                else throw DimensionError("config: unknown model key '" + key + "'" + where);
                break;
            }
            case Section::Graph:
                if (key == "agents") declared_agents = static_cast<int>(parse_number(value, key));
                else throw DimensionError("config: unknown graph key '" + key + "'" + where);
                break;
            default:
                throw DimensionError("config: entry outside of any section" + where);
        }
    }

    // Assemble agents.
    if (raw_agents.count(0) && raw_agents.size() > 1)
        throw DimensionError("config: mix of indexed and unindexed agent sections");
    for (const auto& [idx, raw] : raw_agents) {
        const std::string who = idx == 0 ? "agent" : "agent " + std::to_string(idx);
        cfg.agents.push_back(build_system(raw, who, /*autonomous_ok=*/false));
    }
    if (!raw_agents.empty() && !raw_agents.count(0)) {
        int expect = 1;
        for (const auto& [idx, raw] : raw_agents) {
            if (idx != expect++)
                throw DimensionError("config: agent sections must be numbered 1..N contiguously");
        }
    }
    if (saw_leader) cfg.leader = build_system(raw_leader, "leader", /*autonomous_ok=*/true);

    // Assemble graph.
    int N = declared_agents;
    for (const auto& e : edges) N = std::max({N, e.from, e.to});
    for (const auto& [agent, gain] : pins) N = std::max(N, agent);
    if (N == 0 && cfg.mode != DesignMode::Heterogeneous) N = 1;
    if (N == 0) N = static_cast<int>(cfg.agents.size());
    cfg.adjacency = Matrix::Zero(N, N);
    cfg.pinning = Vector::Zero(N);
    for (const auto& e : edges) {
        if (e.from < 1 || e.from > N || e.to < 1 || e.to > N || e.from == e.to)
            throw DimensionError("config: edge endpoints out of range");
        cfg.adjacency(e.to - 1, e.from - 1) = e.weight;
    }
    for (const auto& [agent, gain] : pins) {
        if (agent < 1 || agent > N) throw DimensionError("config: pin index out of range");
        cfg.pinning(agent - 1) = gain;
    }

    cfg.validate();
    return cfg;
}

ScenarioConfig parse_config_text(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw NumericalError("config: cannot open " + path);
    return parse_config(is);
}

std::string demo_config_text() {
    return R"(# Four vehicle-like agents synchronize their position outputs to a
# constant-velocity leader. Only agent 1 sees the leader.

[scenario]
name = demo
mode = heterogeneous
duration = 40
h = 0.001
seed = 1

[data]
T = 0.37

[leader]
A = [[0,1],[0,0]]
C = [[1,0]]

[agent 1]
A = [[0,1,0],[0,0,1],[0,0,-1]]
B = [[0],[0],[1]]
C = [[1,0,0]]

[agent 2]
A = [[0,1,0],[0,0,1],[0,0,-10]]
B = [[0],[0],[2]]
C = [[1,0,0]]

[agent 3]
A = [[0,1,0],[0,0,1],[0,-10,-2]]
B = [[0],[0],[1]]
C = [[1,0,0]]

[agent 4]
A = [[0,1,0],[0,0,1],[0,-1,-2]]
B = [[0],[0],[1]]
C = [[1,0,0]]

[graph]
agents = 4
edge 1 -> 2 : 1
edge 1 -> 3 : 1
edge 2 -> 3 : 1
edge 3 -> 4 : 1
pin 1 : 1
)";
}

ScenarioConfig demo_scenario() { return parse_config_text(demo_config_text()); }

}  // namespace dbsync
