#include "dbsync/commands.hpp"

#include "dbsync/closedloop.hpp"
#include "dbsync/datarep.hpp"
#include "dbsync/hetero.hpp"
#include "dbsync/io.hpp"
#include "dbsync/linalg.hpp"
#include "dbsync/lmi.hpp"
#include "dbsync/oracle.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace dbsync::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json finite_or_null(double v) {
    if (std::isfinite(v)) return json(v);
    return json(nullptr);
}

std::string agent_csv_name(int index) { return "data_agent_" + std::to_string(index) + ".csv"; }

template <typename Fn>
int guarded(const char* stage, int stage_default, Fn&& fn) {
    try {
        return fn();
    } catch (const DivergenceError& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        return kExitSimulation;
    } catch (const InfeasibleError& e) {
        std::cerr << stage << ": " << e.what() << " (margin " << e.margin << ")\n";
        return kExitDesign;
    } catch (const SolverFailure& e) {
        std::cerr << stage << ": solver failure: " << e.what() << "\n";
        return kExitDesign;
    } catch (const RepresentationError& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        return kExitDesign;
    } catch (const IoError& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        return stage_default;
    }
}

void write_text_file(const fs::path& path, const std::string& contents) {
    io::write_file(path.string(), contents);
}

json load_json(const fs::path& path) { return json::parse(io::read_file(path.string())); }

Trajectory load_trajectory(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    return read_trajectory_csv(is);
}

struct CollectedData {
    std::vector<AgentData> agents;
    std::shared_ptr<hetero::LeaderData> leader;
};

CollectedData load_collected(const ScenarioConfig& cfg, const fs::path& dir) {
    const json manifest = load_json(dir / "manifest.json");
    const double T = manifest.at("T").get<double>();
    CollectedData data;
    for (const auto& entry : manifest.at("agents")) {
        const Trajectory traj = load_trajectory(dir / entry.at("file").get<std::string>());
        data.agents.emplace_back(build_data_matrices(traj, T, entry.at("M").get<int>()));
    }
    if (manifest.contains("leader")) {
        const auto& entry = manifest.at("leader");
        const Trajectory traj = load_trajectory(dir / entry.at("file").get<std::string>());
        data.leader = std::make_shared<hetero::LeaderData>(
            hetero::build_leader_data(traj, T, entry.at("M0").get<int>()));
    }
    (void)cfg;
    return data;
}

}  // namespace

std::string default_output_root() {
    if (const char* env = std::getenv("DBSYNC_OUT"); env && *env) return env;
    return "runs";
}

int cmd_collect(const ScenarioConfig& cfg, const std::string& run_dir) {
    return guarded("collect", kExitData, [&]() -> int {
        cfg.validate();
        const fs::path dir(run_dir);
        fs::create_directories(dir);

        json manifest;
        manifest["name"] = cfg.name;
        manifest["mode"] = to_string(cfg.mode);
        manifest["T"] = cfg.T;
        manifest["h"] = cfg.h;
        manifest["seed"] = cfg.seed;
        manifest["agents"] = json::array();

        bool all_ok = true;
        std::string diagnostic;
        const int experiments = cfg.homogeneous() ? 1 : cfg.agent_count();
        for (int i = 1; i <= experiments; ++i) {
            const LtiSystem& sys = cfg.agent_model(i - 1);
            const int order = sys.n() + 1;
            const int M = cfg.data_columns(sys);
            const PcpeInput pcpe = generate_pcpe(sys.m(), order, cfg.T, M,
                                                 derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
            const long kt = grid_index(cfg.T, cfg.h, "collect: T");
            const double duration = static_cast<double>(M) * kt * cfg.h;
            const Trajectory traj =
                simulate(sys, Vector::Zero(sys.n()), PcpeSignal(pcpe), duration, cfg.h);

            std::ostringstream csv;
            write_trajectory_csv(csv, traj);
            write_text_file(dir / agent_csv_name(i), csv.str());

            const AgentData data(build_data_matrices(traj, cfg.T, M));
            const bool pe = pe_rank_check(data);
            if (!pe) {
                all_ok = false;
                diagnostic = "agent " + std::to_string(i) + " failed the excitation rank check";
            }
            manifest["agents"].push_back({{"index", i},
                                          {"file", agent_csv_name(i)},
                                          {"n", sys.n()},
                                          {"m", sys.m()},
                                          {"p", sys.p()},
                                          {"M", M},
                                          {"order", order},
                                          {"pe_rank_check", pe}});
        }

        if (!cfg.homogeneous()) {
            const LtiSystem& leader = *cfg.leader;
            const int M0 = cfg.leader_data_columns();
            const double grid_step = 0.5 * cfg.h;  // stage-exact reads at h/2
            Rng rng(derive_seed(cfg.seed, 100));
            bool rank_ok = false;
            Trajectory traj;
            for (int attempt = 0; attempt < 16 && !rank_ok; ++attempt) {
                traj = hetero::record_leader_trajectory(leader, rng.uniform_vector(leader.n()),
                                                        cfg.T, M0, grid_step);
                rank_ok = hetero::leader_rank_check(hetero::build_leader_data(traj, cfg.T, M0));
            }
            std::ostringstream csv;
            write_trajectory_csv(csv, traj);
            write_text_file(dir / "data_leader.csv", csv.str());
            manifest["leader"] = {{"file", "data_leader.csv"},
                                  {"n0", leader.n()},
                                  {"M0", M0},
                                  {"grid_step", grid_step},
                                  {"rank_check", rank_ok}};
            if (!rank_ok) {
                all_ok = false;
                diagnostic = "leader trajectory failed the rank check";
            }
        }

        write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
        if (!all_ok) {
            std::cerr << "collect: " << diagnostic << "\n";
            return kExitData;
        }
        std::cout << "collect: wrote " << (dir / "manifest.json").string() << "\n";
        return kExitOk;
    });
}

int cmd_design(const ScenarioConfig& cfg, const std::string& run_dir) {
    return guarded("design", kExitDesign, [&]() -> int {
        cfg.validate();
        const fs::path dir(run_dir);
        const Topology top = cfg.topology();

        const auto tree = check_spanning_tree_with_leader(top);
        if (!tree) {
            std::cerr << "design: the leader does not reach every agent through the graph\n";
            return kExitDesign;
        }

        const CollectedData data = load_collected(cfg, dir);
        json report;
        report["mode"] = to_string(cfg.mode);
        report["lg_min_singular_value"] = tree.lg_min_singular_value;

        if (cfg.mode == DesignMode::HomogeneousDistributed) {
            const lmi::SyncCertificate cert = lmi::design_distributed_sync(data.agents[0], top);
            io::Archive archive = io::to_archive(cert);
            archive.scalars["kind"] = 0.0;  // distributed
            std::ostringstream os;
            io::write_archive(os, archive);
            write_text_file(dir / "certificate.txt", os.str());

            const Matrix ac = oracle::closed_loop_matrix(cfg.agents[0], top, cert.K);
            const auto hurwitz = lmi::verify_hurwitz(ac);
            report["margin"] = cert.margin;
            report["closed_loop_abscissa"] = hurwitz.abscissa;
            report["hurwitz"] = hurwitz.hurwitz;
            json gains = json::array();
            for (const auto& k : cert.K) gains.push_back(matrix_to_json(k));
            report["K"] = gains;
        } else if (cfg.mode == DesignMode::HomogeneousGlobal) {
            const lmi::GlobalSyncDesign design = lmi::design_global_sync(data.agents[0], top);
            io::Archive archive;
            archive.scalars["kind"] = 1.0;  // global
            archive.scalars["margin"] = design.margin;
            archive.matrices["K"] = design.K;
            archive.matrices["Lambda"] = design.Lambda;
            archive.matrices["P"] = design.P;
            std::ostringstream os;
            io::write_archive(os, archive);
            write_text_file(dir / "certificate.txt", os.str());

            const Matrix lg = laplacian(top) + Matrix(top.pinning.asDiagonal());
            const Matrix ac = kron(Matrix::Identity(top.N, top.N), cfg.agents[0].A) -
                              kron(lg, cfg.agents[0].B) * design.K;
            const auto hurwitz = lmi::verify_hurwitz(ac);
            report["margin"] = design.margin;
            report["closed_loop_abscissa"] = hurwitz.abscissa;
            report["hurwitz"] = hurwitz.hurwitz;
            report["K"] = matrix_to_json(design.K);
        } else {
            if (!data.leader) throw IoError("design: leader data missing from " + run_dir);
            report["agents"] = json::array();
            for (int i = 0; i < cfg.agent_count(); ++i) {
                const AgentData& agent_data = data.agents[static_cast<std::size_t>(i)];
                const lmi::StabilizerDesign stab = lmi::design_single_stabilizer(agent_data);
                const hetero::RegulatorSolution reg =
                    hetero::solve_regulator(agent_data, *data.leader);

                io::Archive archive;
                archive.scalars["margin"] = stab.margin;
                archive.scalars["residual_dynamics"] = reg.residual_dynamics;
                archive.scalars["residual_output"] = reg.residual_output;
                archive.matrices["K"] = stab.K;
                archive.matrices["P"] = stab.P;
                archive.matrices["S"] = reg.S;
                archive.matrices["Pi"] = reg.Pi;
                archive.matrices["Gamma"] = reg.Gamma;
                std::ostringstream os;
                io::write_archive(os, archive);
                write_text_file(dir / ("controller_agent_" + std::to_string(i + 1) + ".txt"),
                                os.str());

                const LtiSystem& sys = cfg.agents[static_cast<std::size_t>(i)];
                const auto model_res = hetero::verify_regulator_model(reg, sys, *cfg.leader);
                const auto hurwitz = lmi::verify_hurwitz(sys.A - sys.B * stab.K);
                report["agents"].push_back({{"index", i + 1},
                                            {"stabilizer_margin", stab.margin},
                                            {"closed_loop_abscissa", hurwitz.abscissa},
                                            {"hurwitz", hurwitz.hurwitz},
                                            {"residual_dynamics", reg.residual_dynamics},
                                            {"residual_output", reg.residual_output},
                                            {"model_residual_dynamics", model_res.first},
                                            {"model_residual_output", model_res.second},
                                            {"K", matrix_to_json(stab.K)},
                                            {"Pi", matrix_to_json(reg.Pi)},
                                            {"Gamma", matrix_to_json(reg.Gamma)}});
            }
        }

        write_text_file(dir / "design_report.json", report.dump(2) + "\n");
        std::cout << "design: wrote " << (dir / "design_report.json").string() << "\n";
        return kExitOk;
    });
}

int cmd_simulate(const ScenarioConfig& cfg, const std::string& run_dir) {
    return guarded("simulate", kExitSimulation, [&]() -> int {
        cfg.validate();
        const fs::path dir(run_dir);
        const Topology top = cfg.topology();
        Rng rng(derive_seed(cfg.seed, 200));

        closedloop::NetworkRun run;
        if (cfg.homogeneous()) {
            std::istringstream is(io::read_file((dir / "certificate.txt").string()));
            const io::Archive archive = io::read_archive(is);
            const LtiSystem& sys = cfg.agents[0];
            const Matrix agent_init = rng.uniform_matrix(sys.n(), top.N);
            const Vector leader_init = rng.uniform_vector(sys.n());
            if (archive.scalar("kind") == 0.0) {
                const lmi::SyncCertificate cert = io::certificate_from_archive(archive);
                run = closedloop::run_homogeneous(sys, top, cert.K, agent_init, leader_init,
                                                  cfg.duration, cfg.h);
            } else {
                run = closedloop::run_homogeneous_global(sys, top, archive.matrix("K"), agent_init,
                                                         leader_init, cfg.duration, cfg.h);
            }
        } else {
            const CollectedData data = load_collected(cfg, dir);
            if (!data.leader) throw IoError("simulate: leader data missing from " + run_dir);
            std::vector<hetero::DynamicController> ctrls;
            std::vector<Vector> agent_init;
            for (int i = 0; i < cfg.agent_count(); ++i) {
                std::istringstream is(io::read_file(
                    (dir / ("controller_agent_" + std::to_string(i + 1) + ".txt")).string()));
                const io::Archive archive = io::read_archive(is);
                hetero::RegulatorSolution reg;
                reg.S = archive.matrix("S");
                reg.Pi = archive.matrix("Pi");
                reg.Gamma = archive.matrix("Gamma");
                reg.residual_dynamics = archive.scalar("residual_dynamics");
                reg.residual_output = archive.scalar("residual_output");
                const Vector zeta0 = rng.uniform_vector(cfg.leader->n());
                ctrls.push_back(
                    hetero::init_controller(reg, archive.matrix("K"), zeta0, data.leader));
                agent_init.push_back(
                    rng.uniform_vector(cfg.agents[static_cast<std::size_t>(i)].n()));
            }
            const Vector leader_init = rng.uniform_vector(cfg.leader->n());
            run = closedloop::run_heterogeneous(cfg.agents, *cfg.leader, top, ctrls, agent_init,
                                                leader_init, cfg.duration, cfg.h);
        }

        std::ostringstream csv;
        closedloop::write_network_csv(csv, run);
        write_text_file(dir / "run.csv", csv.str());
        write_text_file(dir / "plot_run.py",
                        closedloop::plot_script("run.csv", top.N, run.node_output_dim));

        json metrics;
        metrics["mode"] = to_string(cfg.mode);
        metrics["seed"] = cfg.seed;
        metrics["duration"] = cfg.duration;
        metrics["h"] = cfg.h;
        metrics["initial_error_norm"] = run.metrics.initial_error_norm;
        metrics["final_error_norm"] = run.metrics.final_error_norm;
        metrics["settling_time"] = finite_or_null(run.metrics.settling_time);
        metrics["converged"] = run.metrics.converged;
        metrics["tail_start"] = run.metrics.tail_start;
        metrics["max_error_tail"] = run.metrics.max_error_tail;
        metrics["consistency_residual"] = finite_or_null(run.metrics.consistency_residual);
        metrics["max_boundary_jump"] = finite_or_null(run.metrics.max_boundary_jump);
        write_text_file(dir / "metrics.json", metrics.dump(2) + "\n");
        std::cout << "simulate: wrote " << (dir / "metrics.json").string() << "\n";
        return kExitOk;
    });
}

int cmd_demo(const std::string& out_dir, std::uint64_t base_seed, int num_seeds) {
    return guarded("demo", kExitSimulation, [&]() -> int {
        if (num_seeds < 1) throw DimensionError("demo: need at least one seed");
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        write_text_file(dir / "config.txt", demo_config_text());

        json summary;
        summary["threshold"] = 1e-2;
        summary["seeds"] = json::array();
        std::ostringstream text;
        bool all_pass = true;

        for (int s = 0; s < num_seeds; ++s) {
            ScenarioConfig cfg = demo_scenario();
            cfg.seed = base_seed + static_cast<std::uint64_t>(s);
            const fs::path seed_dir = dir / ("seed_" + std::to_string(cfg.seed));
            if (int rc = cmd_collect(cfg, seed_dir.string()); rc != kExitOk) return rc;
            if (int rc = cmd_design(cfg, seed_dir.string()); rc != kExitOk) return rc;
            if (int rc = cmd_simulate(cfg, seed_dir.string()); rc != kExitOk) return rc;

            const json metrics = load_json(seed_dir / "metrics.json");
            const double tail = metrics.at("max_error_tail").get<double>();
            const bool pass = tail <= 1e-2;
            all_pass = all_pass && pass;
            summary["seeds"].push_back({{"seed", cfg.seed},
                                        {"max_error_tail", tail},
                                        {"tail_start", metrics.at("tail_start").get<double>()},
                                        {"pass", pass}});
            text << (pass ? "PASS" : "FAIL") << " seed " << cfg.seed
                 << ": max output error after t = " << metrics.at("tail_start").get<double>()
                 << " s is " << tail << " (threshold 0.01)\n";
        }
        summary["all_pass"] = all_pass;
        write_text_file(dir / "summary.json", summary.dump(2) + "\n");
        write_text_file(dir / "summary.txt", text.str());
        std::cout << text.str();
        std::cout << (all_pass ? "demo: all seeds passed\n" : "demo: FAILURES present\n");
        return all_pass ? kExitOk : kExitSimulation;
    });
}

}  // namespace dbsync::cli
