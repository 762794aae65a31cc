#pragma once

#include "dual.hpp"

#include <deque>

namespace bddmatch {

    struct step_config {
        double curvature_eps = 1e-8;     // store a pair only if s^T y >= eps
        double step_grow = 1.1;          // applied on small but nonnegative improvement
        double step_shrink = 0.8;        // applied when a trial does not improve
        int max_trials = 5;
        double delta_min_factor = 1e-6;  // delta_min = factor * (E(lambda^1) - E(lambda^0))
        double initial_step = 1.0;
        std::size_t history_size = 10;

        void validate() const
        {
            if(!(step_shrink > 0.0 && step_shrink < 1.0 && step_grow > 1.0))
                throw error("step factors must satisfy 0 < shrink < 1 < grow");
            if(max_trials < 1) throw error("max_trials must be at least 1");
            if(!(curvature_eps > 0.0)) throw error("curvature threshold must be positive");
            if(history_size < 1) throw error("history size must be at least 1");
            if(!(initial_step > 0.0)) throw error("initial step must be positive");
        }
    };

    // Limited-memory inverse Hessian of the negated dual objective, newest pair first.
    class lbfgs_history {
        public:
            struct pair {
                std::vector<double> s;
                std::vector<double> y;
                double rho;
            };

            explicit lbfgs_history(std::size_t memory = 10) : memory_(memory) {}

            std::size_t size() const { return pairs_.size(); }
            bool empty() const { return pairs_.empty(); }
            std::size_t memory() const { return memory_; }
            const pair& operator[](std::size_t k) const { return pairs_[k]; }

            void push_front(std::vector<double> s, std::vector<double> y, double sy)
            {
                pairs_.push_front({std::move(s), std::move(y), 1.0 / sy});
                if(pairs_.size() > memory_)
                    pairs_.pop_back();
            }

            void clear() { pairs_.clear(); }

        private:
            std::size_t memory_;
            std::deque<pair> pairs_;
    };

    namespace detail {
        inline double dot(std::span<const double> a, std::span<const double> b)
        {
            double r = 0.0;
            for(std::size_t k = 0; k < a.size(); ++k)
                r += a[k] * b[k];
            return r;
        }
    }

    // Stores (s, y) when the curvature condition s^T y >= eps holds. Returns whether it was stored.
    inline bool update_history(std::vector<double> s, std::vector<double> y, lbfgs_history& history, const step_config& cfg)
    {
        if(s.size() != y.size())
            throw error("s and y must have the same length");
        const double sy = detail::dot(s, y);
        if(!(sy >= cfg.curvature_eps))
            return false;
        history.push_front(std::move(s), std::move(y), sy);
        return true;
    }

    // Two-loop recursion: returns H g for the stored inverse Hessian estimate.
    inline std::vector<double> lbfgs_direction(std::span<const double> g, const lbfgs_history& history)
    {
        if(history.empty())
            throw empty_history();
        const std::size_t m = history.size();
        std::vector<double> q(g.begin(), g.end());
        std::vector<double> alpha(m);
        for(std::size_t k = 0; k < m; ++k) {
            const auto& p = history[k];
            alpha[k] = p.rho * detail::dot(p.s, q);
            for(std::size_t t = 0; t < q.size(); ++t)
                q[t] -= alpha[k] * p.y[t];
        }
        const auto& newest = history[0];
        const double scale = detail::dot(newest.s, newest.y) / detail::dot(newest.y, newest.y);
        for(double& v : q)
            v *= scale;
        for(std::size_t k = m; k-- > 0;) {
            const auto& p = history[k];
            const double beta = p.rho * detail::dot(p.y, q);
            for(std::size_t t = 0; t < q.size(); ++t)
                q[t] += p.s[t] * (alpha[k] - beta);
        }
        return q;
    }

    // Removes the per-variable mean so that moving along the result keeps sum_j lambda_i^j = c_i.
    inline std::vector<double> project_direction(std::span<const double> d_hat, const dual_state& state)
    {
        assert(d_hat.size() == state.size());
        std::vector<double> d(d_hat.begin(), d_hat.end());
        for(var_id i = 0; i < state.instance().nr_variables(); ++i) {
            const auto incs = state.incidences(i);
            if(incs.empty()) continue;
            double mean = 0.0;
            for(const auto& e : incs)
                mean += d_hat[e.flat];
            mean /= static_cast<double>(incs.size());
            for(const auto& e : incs)
                d[e.flat] = d_hat[e.flat] - mean;
        }
        return d;
    }

    struct step_search_result {
        double step;
        bool improved;   // E(lambda + step d) > E(lambda)
        double value;    // E(lambda + step d)
        int evaluations;
    };

    // Grows the step on small nonnegative gains, shrinks it otherwise, and
    // stops early once the gain over E(lambda + previous_step d) reaches delta_min.
    inline step_search_result find_step_size(const dual_state& state, std::span<const double> d, double previous_step,
                                             const step_config& cfg, double delta_min)
    {
        std::vector<double> trial(state.size());
        const auto lambda = state.lambda();
        int evaluations = 0;
        auto energy = [&](double step) {
            for(std::size_t k = 0; k < trial.size(); ++k)
                trial[k] = lambda[k] + step * d[k];
            ++evaluations;
            return state.objective_at(trial);
        };
        double step = previous_step;
        double best_step = previous_step;
        const double e_init = energy(step);
        double e_step = e_init;
        double e_best = e_init;
        for(int t = 0; t < cfg.max_trials; ++t) {
            if(e_step <= e_init)
                step *= cfg.step_shrink;
            else
                step *= cfg.step_grow;
            e_step = energy(step);
            if(e_step >= e_best) {
                best_step = step;
                e_best = e_step;
            }
            if(e_step - e_init >= delta_min)
                break;
        }
        return {best_step, e_best > state.lower_bound(), e_best, evaluations};
    }

    enum class solver_mode { mma_only, hybrid };

    // State carried between iterations of the quasi-Newton powered MMA scheme.
    class quasi_newton_solver {
        public:
            quasi_newton_solver(dual_state& state, step_config cfg, solver_mode mode = solver_mode::hybrid)
                : state_(&state), cfg_(cfg), mode_(mode), history_(cfg.history_size), step_(cfg.initial_step)
            {
                cfg_.validate();
            }

            struct iteration_report {
                bool quasi_newton_step = false; // an L-BFGS step was taken before MMA
                bool history_updated = false;
                double step = 0.0;
                double objective_before = 0.0;
                double objective_after_step = 0.0;
                double objective = 0.0;
            };

            // subgradient, history update, direction, projection, step search,
            // dual step, then one forward/backward MMA iteration.
            iteration_report iterate()
            {
                iteration_report rep;
                rep.objective_before = state_->lower_bound();
                if(iterations_ == 0)
                    initial_objective_ = rep.objective_before;
                if(mode_ == solver_mode::hybrid) {
                    // (s, y) pairs are formed between consecutive post-MMA points
                    std::vector<double> g = state_->subgradient();
                    std::vector<double> lambda(state_->lambda().begin(), state_->lambda().end());
                    if(!prev_lambda_.empty()) {
                        std::vector<double> s(lambda.size()), y(lambda.size());
                        for(std::size_t k = 0; k < s.size(); ++k) {
                            s[k] = lambda[k] - prev_lambda_[k];
                            y[k] = prev_g_[k] - g[k];
                        }
                        rep.history_updated = update_history(std::move(s), std::move(y), history_, cfg_);
                    }
                    if(!history_.empty()) {
                        const std::vector<double> d = project_direction(lbfgs_direction(g, history_), *state_);
                        const step_search_result sr = find_step_size(*state_, d, step_, cfg_, delta_min_);
                        step_ = sr.step;
                        if(sr.improved) {
                            state_->add_scaled(d, sr.step);
                            rep.quasi_newton_step = true;
                            rep.step = sr.step;
                        }
                    }
                    prev_lambda_ = std::move(lambda);
                    prev_g_ = std::move(g);
                }
                rep.objective_after_step = state_->lower_bound();
                state_->mma_iteration();
                rep.objective = state_->lower_bound();
                if(iterations_ == 0)
                    delta_min_ = cfg_.delta_min_factor * (rep.objective - initial_objective_);
                ++iterations_;
                return rep;
            }

            const lbfgs_history& history() const { return history_; }
            double step() const { return step_; }
            double delta_min() const { return delta_min_; }
            std::size_t iterations() const { return iterations_; }
            solver_mode mode() const { return mode_; }

        private:
            dual_state* state_;
            step_config cfg_;
            solver_mode mode_;
            lbfgs_history history_;
            double step_;
            double delta_min_ = 0.0;
            double initial_objective_ = 0.0;
            std::size_t iterations_ = 0;
            std::vector<double> prev_lambda_;
            std::vector<double> prev_g_;
    };

}
