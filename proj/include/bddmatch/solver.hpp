#pragma once

#include "lbfgs.hpp"
#include "primal.hpp"
#include "split.hpp"

#include <chrono>
#include <optional>
#include <string>

namespace bddmatch {

    struct solve_config {
        solver_mode mode = solver_mode::hybrid;
        std::size_t chunk_size = 128;    // 0 keeps every constraint whole
        step_config step;
        std::size_t max_iterations = 1000;
        double max_seconds = 3600.0;
        double dual_tolerance = 1e-7;    // stop once the relative gain of an iteration drops below this
        std::size_t patience = 5;        // ... for this many consecutive iterations
        primal_config primal;
        int ring = 2;
        int threads = 1;
        std::uint64_t seed = 0;
        bool record_time = true;         // false writes 0 into the time column for reproducible logs

        void validate() const
        {
            step.validate();
            if(chunk_size == 1) throw error("chunk size must be 0 (off) or at least 2");
            if(max_iterations < 1) throw error("max_iterations must be positive");
            if(!(max_seconds > 0.0)) throw error("max_seconds must be positive");
            if(!(dual_tolerance >= 0.0)) throw error("dual tolerance must be nonnegative");
            if(primal.fractions.empty()) throw error("at least one fixing fraction is required");
            for(double f : primal.fractions)
                if(!(f > 0.0 && f <= 1.0)) throw error("fixing fractions must lie in (0, 1]");
            if(ring < 1) throw error("ring must be at least 1");
            if(threads < 1) throw error("thread count must be positive");
        }
    };

    struct convergence_row {
        double time_s = 0.0;
        std::size_t iteration = 0;
        std::string kind;                 // "mma", "hybrid" or "primal"
        double dual_objective = 0.0;
        double relative_dual_gap = 0.0;   // against the best dual bound known when the log is finalised
        double primal_objective = std::numeric_limits<double>::quiet_NaN();
        double primal_dual_gap = std::numeric_limits<double>::quiet_NaN();
    };

    // Denominator of relative dual quantities; absolute near zero.
    inline double dual_scale(double d) { return std::max(std::abs(d), 1.0); }

    // Fills relative_dual_gap = (d* - d) / max(|d*|, 1) for every row.
    inline void finalize_dual_gaps(std::vector<convergence_row>& rows, double best_dual)
    {
        const double scale = dual_scale(best_dual);
        for(auto& r : rows)
            r.relative_dual_gap = std::max(0.0, (best_dual - r.dual_objective) / scale);
    }

    struct solve_result {
        std::vector<char> assignment;     // over the variables of the input instance
        bool found = false;
        bool infeasible = false;
        gap_report gap;
        double best_dual = -std::numeric_limits<double>::infinity();
        std::size_t iterations = 0;
        std::size_t qn_steps = 0;
        std::size_t primal_attempts = 0;
        double fixing_fraction = 0.0;
        double seconds = 0.0;
        double dual_seconds = 0.0;
        std::vector<convergence_row> log;
    };

    // Runs the dual ascent alone and returns the per-iteration bounds, entry 0
    // being the initial bound. Used for convergence studies.
    inline std::vector<double> dual_trace(const ilp_instance& instance, const solve_config& cfg, std::size_t iterations)
    {
        const ilp_instance work = cfg.chunk_size ? split_long_constraints(instance, cfg.chunk_size) : instance;
        dual_state state(work, cfg.threads);
        quasi_newton_solver qn(state, cfg.step, cfg.mode);
        std::vector<double> trace{state.lower_bound()};
        for(std::size_t t = 0; t < iterations; ++t)
            trace.push_back(qn.iterate().objective);
        return trace;
    }

    inline solve_result solve(const ilp_instance& instance, const solve_config& cfg = {})
    {
        cfg.validate();
        using clock = std::chrono::steady_clock;
        const auto start = clock::now();
        auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
        auto stamp = [&] { return cfg.record_time ? elapsed() : 0.0; };

        solve_result res;
        const ilp_instance work = cfg.chunk_size ? split_long_constraints(instance, cfg.chunk_size) : instance;
        dual_state state(work, cfg.threads);
        quasi_newton_solver qn(state, cfg.step, cfg.mode);
        const char* kind = cfg.mode == solver_mode::hybrid ? "hybrid" : "mma";

        double best = state.lower_bound();
        std::vector<double> best_lambda(state.lambda().begin(), state.lambda().end());
        res.log.push_back({stamp(), 0, kind, best});
        std::size_t stalled = 0;
        for(std::size_t t = 1; t <= cfg.max_iterations; ++t) {
            const double before = state.lower_bound();
            const auto rep = qn.iterate();
            res.qn_steps += rep.quasi_newton_step;
            res.iterations = t;
            res.log.push_back({stamp(), t, kind, rep.objective});
            if(rep.objective > best) {
                best = rep.objective;
                best_lambda.assign(state.lambda().begin(), state.lambda().end());
            }
            const double gain = (rep.objective - before) / dual_scale(rep.objective);
            stalled = gain < cfg.dual_tolerance ? stalled + 1 : 0;
            if(stalled >= cfg.patience || elapsed() >= cfg.max_seconds)
                break;
        }
        res.best_dual = best;
        res.dual_seconds = elapsed();

        if(state.lower_bound() < best)
            state.set_lambda(best_lambda);
        primal_config pcfg = cfg.primal;
        const primal_result pr = recover_primal(work, state, pcfg, best);
        res.primal_attempts = pr.attempts;
        res.infeasible = pr.infeasible;
        res.gap = pr.gap;
        if(pr.found) {
            res.found = true;
            res.fixing_fraction = pr.fraction;
            res.assignment.assign(pr.assignment.begin(), pr.assignment.begin() + static_cast<std::ptrdiff_t>(instance.nr_variables()));
            res.gap = make_gap_report(instance.objective(res.assignment), best);
            res.log.push_back({stamp(), res.iterations, "primal", best, 0.0, res.gap.primal, res.gap.primal_dual_gap});
        }
        finalize_dual_gaps(res.log, best);
        res.seconds = elapsed();
        return res;
    }

}
