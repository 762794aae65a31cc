#include <bddmatch/io.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace bddmatch;

namespace {

    enum exit_code : int { ok = 0, failure = 1, uncertified = 2, infeasible = 3, bad_input = 4 };

    struct common_options {
        std::string mode = "hybrid";
        std::vector<double> fractions = {0.9, 0.75, 0.5, 0.25};
        bool no_timing = false;
        bool no_propagate = false;
        std::string log_path;
        solve_config cfg;
    };

    void add_solver_options(CLI::App& app, common_options& o)
    {
        app.add_option("--mode", o.mode, "dual solver: hybrid (L-BFGS + MMA) or mma-only")
            ->check(CLI::IsMember({"hybrid", "mma-only"}))
            ->capture_default_str();
        app.add_option("--chunk-size", o.cfg.chunk_size, "split constraints longer than this, 0 disables splitting")->capture_default_str();
        app.add_option("--max-iterations", o.cfg.max_iterations)->capture_default_str();
        app.add_option("--max-seconds", o.cfg.max_seconds)->capture_default_str();
        app.add_option("--tolerance", o.cfg.dual_tolerance, "stop when the relative gain per iteration stays below this")->capture_default_str();
        app.add_option("--patience", o.cfg.patience, "iterations below the tolerance before stopping")->capture_default_str();
        app.add_option("--fractions", o.fractions, "fixing fractions tried in order")->capture_default_str();
        app.add_option("--primal-time-limit", o.cfg.primal.time_limit_seconds)->capture_default_str();
        app.add_option("--probe-nodes", o.cfg.primal.probe_node_limit, "witness search node limit during fixing, 0 disables")
            ->capture_default_str();
        app.add_flag("--no-propagate", o.no_propagate, "fix all selected variables at once");
        app.add_option("--history", o.cfg.step.history_size, "L-BFGS memory")->capture_default_str();
        app.add_option("--initial-step", o.cfg.step.initial_step)->capture_default_str();
        app.add_option("--curvature-eps", o.cfg.step.curvature_eps)->capture_default_str();
        app.add_option("--step-grow", o.cfg.step.step_grow)->capture_default_str();
        app.add_option("--step-shrink", o.cfg.step.step_shrink)->capture_default_str();
        app.add_option("--step-trials", o.cfg.step.max_trials)->capture_default_str();
        app.add_option("--delta-min-factor", o.cfg.step.delta_min_factor)->capture_default_str();
        app.add_option("--threads", o.cfg.threads)->capture_default_str();
        app.add_option("--seed", o.cfg.seed, "recorded only; the solver is deterministic")->capture_default_str();
        app.add_option("--log", o.log_path, "write the convergence log (CSV) here");
        app.add_flag("--no-timing", o.no_timing, "write 0 into the time column of the log");
    }

    solve_config finish(common_options& o)
    {
        o.cfg.mode = o.mode == "mma-only" ? solver_mode::mma_only : solver_mode::hybrid;
        o.cfg.primal.fractions = o.fractions;
        o.cfg.primal.propagate = !o.no_propagate;
        o.cfg.record_time = !o.no_timing;
        o.cfg.validate();
        return o.cfg;
    }

    void write_log(const common_options& o, std::span<const convergence_row> rows)
    {
        if(o.log_path.empty()) return;
        std::ofstream out(o.log_path, std::ios::binary);
        if(!out) throw error(o.log_path + ": cannot open file for writing");
        io::write_convergence_log(out, rows);
    }

    int status_code(const solve_result& r)
    {
        if(!r.found) return infeasible;
        return r.gap.certified ? ok : uncertified;
    }

    void report(const solve_result& r)
    {
        std::cerr << (r.found ? (r.gap.certified ? "certified" : "feasible") : "no solution") << "  primal " << r.gap.primal << "  dual "
                  << r.best_dual << "  gap " << r.gap.primal_dual_gap << "  iterations " << r.iterations << "  time " << r.seconds << "s\n";
    }

    feature_matrix positions(const mesh& m)
    {
        feature_matrix f;
        for(const vec3& p : m.vertices()) f.push_back({p[0], p[1], p[2]});
        return f;
    }

    struct pair_inputs {
        std::string mesh_a, mesh_b, features_a, features_b;
    };

    void add_pair_inputs(CLI::App& app, pair_inputs& in)
    {
        app.add_option("mesh_a", in.mesh_a, "first mesh (OFF or ASCII PLY)")->required()->check(CLI::ExistingFile);
        app.add_option("mesh_b", in.mesh_b, "second mesh")->required()->check(CLI::ExistingFile);
        app.add_option("--features-a", in.features_a, "per-vertex features of the first mesh (DMF1 or CSV), default: positions")
            ->check(CLI::ExistingFile);
        app.add_option("--features-b", in.features_b)->check(CLI::ExistingFile);
    }

    struct loaded_pair {
        mesh a, b;
        feature_matrix fa, fb;
    };

    loaded_pair load_pair(const pair_inputs& in)
    {
        loaded_pair p{io::read_mesh(in.mesh_a), io::read_mesh(in.mesh_b), {}, {}};
        validate_mesh(p.a, in.mesh_a);
        validate_mesh(p.b, in.mesh_b);
        validate_mesh_pair(p.a, p.b);
        p.fa = in.features_a.empty() ? positions(p.a) : io::read_features(in.features_a);
        p.fb = in.features_b.empty() ? positions(p.b) : io::read_features(in.features_b);
        io::check_feature_rows(p.fa, p.a.nr_vertices(), "features of " + in.mesh_a);
        io::check_feature_rows(p.fb, p.b.nr_vertices(), "features of " + in.mesh_b);
        return p;
    }

}

int main(int argc, char** argv)
{
    CLI::App app{"Shape matching by Lagrange decomposition over binary decision diagrams"};
    app.require_subcommand(1);

    common_options match_opt, ilp_opt, c2f_opt;
    pair_inputs match_in, export_in;
    std::string match_out, ilp_in, ilp_out, export_out, verify_lp, verify_sol, c2f_manifest, c2f_out, oracle_lp, oracle_out;
    int c2f_max_ring = 3;
    double oracle_time = 60.0;
    std::size_t oracle_max_vars = 200000;

    auto* match = app.add_subcommand("match", "match two meshes and write the correspondence as JSON");
    add_pair_inputs(*match, match_in);
    match->add_option("--out", match_out, "solution JSON")->required();
    add_solver_options(*match, match_opt);

    auto* solve_ilp = app.add_subcommand("solve-ilp", "solve a 0-1 equality program given in LP format");
    solve_ilp->add_option("lp", ilp_in)->required()->check(CLI::ExistingFile);
    solve_ilp->add_option("--out", ilp_out, "solution JSON")->required();
    add_solver_options(*solve_ilp, ilp_opt);

    auto* export_lp = app.add_subcommand("export-lp", "write the matching program of a mesh pair in LP format");
    add_pair_inputs(*export_lp, export_in);
    export_lp->add_option("--out", export_out)->required();

    auto* verify = app.add_subcommand("verify", "check a solution JSON against an LP instance with exact integer arithmetic");
    verify->add_option("lp", verify_lp)->required()->check(CLI::ExistingFile);
    verify->add_option("solution", verify_sol)->required()->check(CLI::ExistingFile);

    auto* c2f = app.add_subcommand("c2f", "coarse-to-fine matching over a hierarchy manifest");
    c2f->add_option("manifest", c2f_manifest)->required()->check(CLI::ExistingFile);
    c2f->add_option("--out", c2f_out, "solution JSON of the finest level")->required();
    c2f->add_option("--max-ring", c2f_max_ring, "largest ring tried when pruning empties a face")->capture_default_str();
    add_solver_options(*c2f, c2f_opt);

    auto* oracle = app.add_subcommand("oracle", "exact branch-and-bound solve, meant for small instances");
    oracle->add_option("lp", oracle_lp)->required()->check(CLI::ExistingFile);
    oracle->add_option("--out", oracle_out);
    oracle->add_option("--time-limit", oracle_time)->capture_default_str();
    oracle->add_option("--max-variables", oracle_max_vars)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : bad_input;
    }

    try {
        if(*match) {
            const solve_config cfg = finish(match_opt);
            const loaded_pair p = load_pair(match_in);
            const shape_problem sp = build_shape_problem(p.a, p.b, p.fa, p.fb);
            const solve_result r = solve(sp.ilp.instance, cfg);
            write_log(match_opt, r.log);
            report(r);
            if(!r.found) {
                io::write_json(io::solution_json(r), match_out);
                return infeasible;
            }
            const matching m = decode_matching(r.assignment, sp.space, sp.ilp, p.a.nr_vertices(), &p.fa, &p.fb);
            io::write_json(io::matching_json(r, m), match_out);
            return status_code(r);
        }
        if(*solve_ilp) {
            const solve_config cfg = finish(ilp_opt);
            const ilp_instance inst = io::read_lp(ilp_in);
            const solve_result r = solve(inst, cfg);
            write_log(ilp_opt, r.log);
            report(r);
            io::write_json(io::solution_json(r), ilp_out);
            return status_code(r);
        }
        if(*export_lp) {
            const loaded_pair p = load_pair(export_in);
            const shape_problem sp = build_shape_problem(p.a, p.b, p.fa, p.fb);
            io::write_lp(sp.ilp.instance, export_out);
            std::cerr << sp.space.size() << " variables, " << sp.ilp.instance.nr_constraints() << " rows\n";
            return ok;
        }
        if(*verify) {
            const ilp_instance inst = io::read_lp(verify_lp);
            const std::vector<char> x = io::read_solution_assignment(verify_sol, inst.nr_variables());
            std::size_t violated = 0;
            for(std::size_t j = 0; j < inst.nr_constraints(); ++j) {
                const linear_row& row = *inst.constraints()[j].row;
                long long lhs = 0;
                for(std::size_t k = 0; k < row.variables.size(); ++k)
                    if(x[row.variables[k]]) lhs += row.coefficients[k];
                if(lhs != row.rhs) {
                    if(violated < 20) std::cerr << "row c" << j << ": " << lhs << " != " << row.rhs << "\n";
                    ++violated;
                }
            }
            std::cout << (violated ? "infeasible" : "feasible") << " objective " << inst.objective(x) << " violated_rows " << violated << "\n";
            return violated ? infeasible : ok;
        }
        if(*c2f) {
            hierarchy_config hc;
            hc.solve = finish(c2f_opt);
            hc.max_ring = c2f_max_ring;
            const io::hierarchy_input h = io::read_manifest(c2f_manifest);
            for(std::size_t l = 0; l < h.levels_m.size(); ++l) {
                validate_mesh(h.levels_m[l].shape, "level " + std::to_string(l) + " mesh A");
                validate_mesh(h.levels_n[l].shape, "level " + std::to_string(l) + " mesh B");
                validate_mesh_pair(h.levels_m[l].shape, h.levels_n[l].shape);
            }
            const hierarchy_result res = run_hierarchy(h.levels_m, h.levels_n, h.features_m, h.features_n, hc);
            std::vector<convergence_row> all;
            nlohmann::ordered_json levels = nlohmann::ordered_json::array();
            for(const auto& lr : res.levels) {
                std::cerr << "level " << lr.level << " ring " << lr.ring << " variables " << lr.nr_variables << ": ";
                report(lr.solve);
                all.insert(all.end(), lr.solve.log.begin(), lr.solve.log.end());
                levels.push_back({{"level", lr.level},
                                  {"ring", lr.ring},
                                  {"variables", lr.nr_variables},
                                  {"objective", lr.solve.gap.primal},
                                  {"dual_bound", lr.solve.best_dual},
                                  {"gap", lr.solve.gap.primal_dual_gap},
                                  {"certified", lr.solve.gap.certified}});
            }
            write_log(c2f_opt, all);
            nlohmann::ordered_json j = io::matching_json(res.levels.back().solve, res.final_matching());
            j["levels"] = levels;
            io::write_json(j, c2f_out);
            return status_code(res.levels.back().solve);
        }
        if(*oracle) {
            const ilp_instance inst = io::read_lp(oracle_lp);
            if(inst.nr_variables() > oracle_max_vars) {
                std::cerr << "instance has " << inst.nr_variables() << " variables, above --max-variables\n";
                return bad_input;
            }
            exact_options opt;
            opt.time_limit_seconds = oracle_time;
            const exact_result er = exact_solve(inst, opt);
            solve_result r;
            r.found = er.has_solution;
            r.infeasible = er.status == exact_status::infeasible;
            if(er.has_solution) {
                r.assignment = er.assignment;
                r.best_dual = er.status == exact_status::optimal ? er.objective : -std::numeric_limits<double>::infinity();
                r.gap = make_gap_report(er.objective, r.best_dual);
            }
            std::cout << (er.status == exact_status::optimal ? "optimal" : er.status == exact_status::infeasible ? "infeasible" : "timed_out");
            if(er.has_solution) std::cout << " objective " << io::detail::format_double(er.objective);
            std::cout << " nodes " << er.nodes << "\n";
            if(!oracle_out.empty()) io::write_json(io::solution_json(r), oracle_out);
            if(!er.has_solution) return er.status == exact_status::infeasible ? infeasible : uncertified;
            return er.status == exact_status::optimal ? ok : uncertified;
        }
    } catch(const hierarchy_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.infeasible() ? infeasible : bad_input;
    } catch(const parse_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return bad_input;
    } catch(const mesh_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return bad_input;
    } catch(const feature_dimension_mismatch& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return bad_input;
    } catch(const pruned_infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return infeasible;
    } catch(const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bad_input;
    } catch(const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return failure;
    }
    return failure;
}
