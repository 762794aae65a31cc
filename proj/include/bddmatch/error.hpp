#pragma once

#include <stdexcept>
#include <string>

namespace bddmatch {

    // Every error raised by the library derives from this, so the CLI can map
    // input problems to a single exit code.
    class error : public std::runtime_error {
        public:
            using std::runtime_error::runtime_error;
    };

    class empty_feasible_set : public error {
        public:
            empty_feasible_set() : error("constraint has no feasible 0-1 assignment") {}
            explicit empty_feasible_set(const std::string& what) : error(what) {}
    };

    class split_at_terminal_layer : public error {
        public:
            using error::error;
    };

    class empty_history : public error {
        public:
            empty_history() : error("L-BFGS history is empty") {}
    };

    class infeasible_after_fixing : public error {
        public:
            using error::error;
    };

    class mesh_error : public error {
        public:
            using error::error;
    };

    class not_manifold : public mesh_error {
        public:
            using mesh_error::mesh_error;
    };

    class not_closed : public mesh_error {
        public:
            using mesh_error::mesh_error;
    };

    class genus_mismatch : public mesh_error {
        public:
            using mesh_error::mesh_error;
    };

    class degenerate_triangle : public mesh_error {
        public:
            using mesh_error::mesh_error;
    };

    class feature_dimension_mismatch : public error {
        public:
            using error::error;
    };

    class infeasible_input : public error {
        public:
            using error::error;
    };

    class pruned_infeasible : public error {
        public:
            using error::error;
    };

    class parse_error : public error {
        public:
            parse_error(const std::string& file, std::size_t line, const std::string& msg)
                : error(file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
            explicit parse_error(const std::string& msg) : error(msg), line_(0) {}
            std::size_t line() const { return line_; }
        private:
            std::size_t line_;
    };

}
