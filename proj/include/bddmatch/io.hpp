#pragma once

#include "coarse_to_fine.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace bddmatch::io {

    namespace detail {

        inline std::string read_file(const std::string& path)
        {
            std::ifstream in(path, std::ios::binary);
            if(!in)
                throw parse_error(path + ": cannot open file");
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        inline void write_file(const std::string& path, const std::string& content)
        {
            std::ofstream out(path, std::ios::binary);
            if(!out)
                throw error(path + ": cannot open file for writing");
            out << content;
            if(!out)
                throw error(path + ": write failed");
        }

        inline std::string format_double(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        // Splits text into lines and whitespace tokens while remembering line numbers.
        class line_reader {
            public:
                line_reader(std::string text, std::string file) : file_(std::move(file)), in_(std::move(text)) {}

                // Next line that is neither empty nor a comment; false at end of input.
                bool next(std::vector<std::string>& tokens, char comment = '#')
                {
                    std::string line;
                    while(std::getline(in_, line)) {
                        ++line_no_;
                        if(const auto pos = line.find(comment); pos != std::string::npos) line.erase(pos);
                        tokens.clear();
                        std::istringstream ls(line);
                        for(std::string t; ls >> t;) tokens.push_back(t);
                        if(!tokens.empty()) return true;
                    }
                    return false;
                }

                std::size_t line() const { return line_no_; }
                [[noreturn]] void fail(const std::string& msg) const { throw parse_error(file_, line_no_, msg); }

                template<typename T>
                T number(const std::string& tok) const
                {
                    T v{};
                    const auto* first = tok.data();
                    const auto* last = tok.data() + tok.size();
                    if constexpr(std::is_floating_point_v<T>) {
                        // from_chars rejects a leading '+'
                        if(first != last && *first == '+') ++first;
                    }
                    const auto [ptr, ec] = std::from_chars(first, last, v);
                    if(ec != std::errc() || ptr != last)
                        fail("expected a number, found '" + tok + "'");
                    return v;
                }

            private:
                std::string file_;
                std::istringstream in_;
                std::size_t line_no_ = 0;
        };

        inline std::string lower(std::string s)
        {
            for(char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            return s;
        }

        inline std::string extension(const std::string& path) { return lower(std::filesystem::path(path).extension().string()); }

    }

    // ---- meshes ----

    inline mesh parse_off(const std::string& text, const std::string& file = "<off>")
    {
        detail::line_reader r(text, file);
        std::vector<std::string> tok;
        if(!r.next(tok) || tok[0] != "OFF")
            r.fail("missing OFF header");
        std::vector<std::string> counts(tok.begin() + 1, tok.end());
        if(counts.empty()) {
            if(!r.next(tok)) r.fail("missing vertex and face counts");
            counts = tok;
        }
        if(counts.size() < 2) r.fail("expected vertex and face counts");
        const auto nv = r.number<std::size_t>(counts[0]);
        const auto nf = r.number<std::size_t>(counts[1]);
        std::vector<vec3> v(nv);
        for(std::size_t i = 0; i < nv; ++i) {
            if(!r.next(tok)) r.fail("expected " + std::to_string(nv) + " vertices, file ends after " + std::to_string(i));
            if(tok.size() < 3) r.fail("vertex needs three coordinates");
            v[i] = {r.number<double>(tok[0]), r.number<double>(tok[1]), r.number<double>(tok[2])};
        }
        std::vector<face> f(nf);
        for(std::size_t i = 0; i < nf; ++i) {
            if(!r.next(tok)) r.fail("expected " + std::to_string(nf) + " faces, file ends after " + std::to_string(i));
            if(r.number<std::size_t>(tok[0]) != 3 || tok.size() < 4) r.fail("only triangular faces are supported");
            for(int k = 0; k < 3; ++k) {
                const auto idx = r.number<std::size_t>(tok[k + 1]);
                if(idx >= nv) r.fail("vertex index " + std::to_string(idx) + " out of range");
                f[i][k] = static_cast<std::uint32_t>(idx);
            }
        }
        if(r.next(tok))
            r.fail("unexpected content after " + std::to_string(nf) + " faces");
        return mesh(std::move(v), std::move(f));
    }

    inline mesh parse_ply(const std::string& text, const std::string& file = "<ply>")
    {
        detail::line_reader r(text, file);
        std::vector<std::string> tok;
        if(!r.next(tok, '\0') || tok[0] != "ply") r.fail("missing ply magic");
        std::size_t nv = 0, nf = 0;
        std::vector<std::string> vertex_props;
        std::string current;
        bool saw_format = false;
        for(;;) {
            if(!r.next(tok, '\0')) r.fail("header is not terminated by end_header");
            if(tok[0] == "comment" || tok[0] == "obj_info") continue;
            if(tok[0] == "end_header") break;
            if(tok[0] == "format") {
                if(tok.size() < 2 || tok[1] != "ascii") r.fail("only ASCII PLY is supported");
                saw_format = true;
            } else if(tok[0] == "element" && tok.size() == 3) {
                current = tok[1];
                if(current == "vertex") nv = r.number<std::size_t>(tok[2]);
                else if(current == "face") nf = r.number<std::size_t>(tok[2]);
                else r.fail("unsupported element '" + current + "'");
            } else if(tok[0] == "property") {
                if(current == "vertex") vertex_props.push_back(tok.back());
                else if(current == "face" && (tok.size() != 5 || tok[1] != "list")) r.fail("face element needs one list property");
            } else {
                r.fail("unexpected header line '" + tok[0] + "'");
            }
        }
        if(!saw_format) r.fail("missing format line");
        std::array<std::size_t, 3> pos{};
        for(int k = 0; k < 3; ++k) {
            const char* name = k == 0 ? "x" : k == 1 ? "y" : "z";
            const auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
            if(it == vertex_props.end()) r.fail(std::string("vertex property '") + name + "' missing");
            pos[k] = static_cast<std::size_t>(it - vertex_props.begin());
        }
        std::vector<vec3> v(nv);
        for(std::size_t i = 0; i < nv; ++i) {
            if(!r.next(tok, '\0')) r.fail("expected " + std::to_string(nv) + " vertices");
            if(tok.size() != vertex_props.size()) r.fail("vertex has " + std::to_string(tok.size()) + " values, header declares " +
                                                         std::to_string(vertex_props.size()));
            for(int k = 0; k < 3; ++k) v[i][k] = r.number<double>(tok[pos[k]]);
        }
        std::vector<face> f(nf);
        for(std::size_t i = 0; i < nf; ++i) {
            if(!r.next(tok, '\0')) r.fail("expected " + std::to_string(nf) + " faces");
            if(tok.size() != 4 || r.number<std::size_t>(tok[0]) != 3) r.fail("only triangular faces are supported");
            for(int k = 0; k < 3; ++k) {
                const auto idx = r.number<std::size_t>(tok[k + 1]);
                if(idx >= nv) r.fail("vertex index " + std::to_string(idx) + " out of range");
                f[i][k] = static_cast<std::uint32_t>(idx);
            }
        }
        return mesh(std::move(v), std::move(f));
    }

    // OFF or ASCII PLY, chosen by extension and falling back to the header.
    inline mesh read_mesh(const std::string& path)
    {
        const std::string text = detail::read_file(path);
        const std::string ext = detail::extension(path);
        if(ext == ".ply" || (ext != ".off" && text.rfind("ply", 0) == 0))
            return parse_ply(text, path);
        return parse_off(text, path);
    }

    inline std::string format_off(const mesh& m)
    {
        std::string out = "OFF\n" + std::to_string(m.nr_vertices()) + " " + std::to_string(m.nr_triangles()) + " 0\n";
        for(const vec3& p : m.vertices())
            out += detail::format_double(p[0]) + " " + detail::format_double(p[1]) + " " + detail::format_double(p[2]) + "\n";
        for(const face& f : m.triangles())
            out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
        return out;
    }

    inline std::string format_ply(const mesh& m)
    {
        std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(m.nr_vertices()) +
                          "\nproperty double x\nproperty double y\nproperty double z\nelement face " + std::to_string(m.nr_triangles()) +
                          "\nproperty list uchar int vertex_indices\nend_header\n";
        for(const vec3& p : m.vertices())
            out += detail::format_double(p[0]) + " " + detail::format_double(p[1]) + " " + detail::format_double(p[2]) + "\n";
        for(const face& f : m.triangles())
            out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
        return out;
    }

    inline void write_mesh(const mesh& m, const std::string& path)
    {
        detail::write_file(path, detail::extension(path) == ".ply" ? format_ply(m) : format_off(m));
    }

    // ---- features ----

    inline constexpr char feature_magic[4] = {'D', 'M', 'F', '1'};

    inline std::string encode_features(const feature_matrix& f)
    {
        const std::uint32_t rows = static_cast<std::uint32_t>(f.size());
        const std::uint32_t cols = f.empty() ? 0 : static_cast<std::uint32_t>(f[0].size());
        std::string out(feature_magic, 4);
        auto put_u32 = [&](std::uint32_t v) {
            for(int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
        };
        put_u32(rows);
        put_u32(cols);
        for(const auto& row : f) {
            if(row.size() != cols) throw feature_dimension_mismatch("ragged feature matrix");
            for(double d : row) {
                std::uint64_t bits;
                std::memcpy(&bits, &d, 8);
                for(int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
            }
        }
        return out;
    }

    inline feature_matrix decode_features(const std::string& data, const std::string& file = "<features>")
    {
        if(data.size() < 12 || std::memcmp(data.data(), feature_magic, 4) != 0)
            throw parse_error(file + ": bad magic, expected DMF1");
        auto get_u32 = [&](std::size_t at) {
            std::uint32_t v = 0;
            for(int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<unsigned char>(data[at + k])) << (8 * k);
            return v;
        };
        const std::uint32_t rows = get_u32(4), cols = get_u32(8);
        const std::size_t expected = 12 + std::size_t(rows) * cols * 8;
        if(data.size() != expected)
            throw parse_error(file + ": " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix needs " + std::to_string(expected) +
                              " bytes, file has " + std::to_string(data.size()));
        feature_matrix f(rows, std::vector<double>(cols));
        std::size_t at = 12;
        for(auto& row : f)
            for(double& d : row) {
                std::uint64_t bits = 0;
                for(int k = 0; k < 8; ++k) bits |= std::uint64_t(static_cast<unsigned char>(data[at + k])) << (8 * k);
                std::memcpy(&d, &bits, 8);
                at += 8;
            }
        return f;
    }

    inline feature_matrix parse_feature_csv(const std::string& text, const std::string& file = "<csv>")
    {
        std::string normalized = text;
        std::replace(normalized.begin(), normalized.end(), ',', ' ');
        std::replace(normalized.begin(), normalized.end(), ';', ' ');
        detail::line_reader r(normalized, file);
        feature_matrix f;
        std::vector<std::string> tok;
        while(r.next(tok)) {
            std::vector<double> row;
            for(const auto& t : tok) row.push_back(r.number<double>(t));
            if(!f.empty() && row.size() != f[0].size())
                r.fail("row has " + std::to_string(row.size()) + " columns, expected " + std::to_string(f[0].size()));
            f.push_back(std::move(row));
        }
        if(f.empty()) throw parse_error(file + ": no feature rows");
        return f;
    }

    namespace detail {
        inline bool looks_like_text(const std::string& data)
        {
            for(unsigned char c : data)
                if(c == 0 || (c < 32 && c != '\n' && c != '\r' && c != '\t') || c > 126) return false;
            return true;
        }
    }

    // DMF1 binary, or CSV/whitespace text when the content is plain text.
    inline feature_matrix read_features(const std::string& path)
    {
        const std::string data = detail::read_file(path);
        if(data.size() >= 4 && std::memcmp(data.data(), feature_magic, 4) == 0)
            return decode_features(data, path);
        if(detail::looks_like_text(data))
            return parse_feature_csv(data, path);
        throw parse_error(path + ": bad magic, expected DMF1 or CSV text");
    }

    inline void check_feature_rows(const feature_matrix& f, std::size_t nr_vertices, const std::string& what)
    {
        if(f.size() != nr_vertices)
            throw feature_dimension_mismatch(what + ": " + std::to_string(f.size()) + " feature rows but the mesh has " +
                                             std::to_string(nr_vertices) + " vertices");
    }

    inline void write_features(const feature_matrix& f, const std::string& path) { detail::write_file(path, encode_features(f)); }

    // ---- LP ----

    namespace detail {
        inline void append_term(std::string& line, std::string& out, double coef, var_id v, bool first)
        {
            std::string term;
            if(first) term = format_double(coef);
            else if(std::signbit(coef)) term = "- " + format_double(-coef);
            else term = "+ " + format_double(coef);
            term += " x" + std::to_string(v);
            if(line.size() + term.size() > 200) {
                out += line + "\n";
                line = "   ";
            }
            line += " " + term;
        }
    }

    // Minimize / Subject To / Binary / End, one equality row per constraint.
    inline std::string format_lp(const ilp_instance& inst)
    {
        if(inst.nr_constraints() == 0)
            throw error("cannot export an instance without constraints");
        std::string out = "Minimize\n";
        std::string line = " obj:";
        for(var_id i = 0; i < inst.nr_variables(); ++i)
            detail::append_term(line, out, inst.cost(i), i, i == 0);
        out += line + "\nSubject To\n";
        for(std::size_t j = 0; j < inst.nr_constraints(); ++j) {
            const auto& c = inst.constraints()[j];
            if(!c.row)
                throw error("constraint " + std::to_string(j) + " has no linear form (split instances cannot be exported)");
            line = " c" + std::to_string(j) + ":";
            for(std::size_t k = 0; k < c.row->variables.size(); ++k)
                detail::append_term(line, out, static_cast<double>(c.row->coefficients[k]), c.row->variables[k], k == 0);
            out += line + " = " + std::to_string(c.row->rhs) + "\n";
        }
        out += "Binary\n";
        line.clear();
        for(var_id i = 0; i < inst.nr_variables(); ++i) {
            if(line.size() > 200) {
                out += line + "\n";
                line.clear();
            }
            line += " x" + std::to_string(i);
        }
        out += line + "\nEnd\n";
        return out;
    }

    inline ilp_instance parse_lp(const std::string& text, const std::string& file = "<lp>")
    {
        detail::line_reader r(text, file);
        enum class section { none, objective, constraints, binary, done } sec = section::none;
        std::map<var_id, double> costs;
        std::set<var_id> binaries;
        struct pending_row {
            std::vector<std::pair<var_id, double>> terms;
            std::optional<long long> rhs;
            std::size_t line = 0;
        };
        std::vector<pending_row> rows;
        double sign = 1.0;
        std::optional<double> coef;
        bool expect_rhs = false;
        var_id max_var = 0;
        bool any_var = false;

        auto variable = [&](const std::string& t) -> var_id {
            if(t.size() < 2 || t[0] != 'x') r.fail("unknown variable '" + t + "', expected x<index>");
            const auto v = r.number<var_id>(t.substr(1));
            max_var = any_var ? std::max(max_var, v) : v;
            any_var = true;
            return v;
        };
        auto is_number = [](const std::string& t) {
            return !t.empty() && (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '.' ||
                                  ((t[0] == '-' || t[0] == '+') && t.size() > 1));
        };

        std::vector<std::string> tok;
        while(sec != section::done && r.next(tok, '\\')) {
            const std::string head = detail::lower(tok[0]);
            if(head == "minimize" || head == "minimise" || head == "min") { sec = section::objective; continue; }
            if(head == "maximize" || head == "max") r.fail("only minimisation is supported");
            if(head == "subject" || head == "st" || head == "s.t." || head == "such") { sec = section::constraints; continue; }
            if(head == "binary" || head == "binaries" || head == "bin") { sec = section::binary; continue; }
            if(head == "end") { sec = section::done; continue; }
            if(head == "bounds" || head == "general" || head == "generals")
                r.fail("section '" + tok[0] + "' is not supported");
            for(const std::string& t : tok) {
                if(sec == section::none) r.fail("content before the objective section");
                if(sec == section::binary) {
                    binaries.insert(variable(t));
                    continue;
                }
                if(t.back() == ':') {
                    if(sec == section::constraints) {
                        if(!rows.empty() && !rows.back().rhs) r.fail("previous constraint has no right-hand side");
                        rows.push_back({});
                        rows.back().line = r.line();
                    }
                    continue;
                }
                if(expect_rhs) {
                    rows.back().rhs = r.number<long long>(t);
                    expect_rhs = false;
                    continue;
                }
                if(t == "+" || t == "-") {
                    sign = t == "-" ? -1.0 : 1.0;
                    continue;
                }
                if(t == "=" || t == "<=" || t == ">=" || t == "=<" || t == "=>" || t == "<" || t == ">") {
                    if(sec != section::constraints) r.fail("relation outside the constraint section");
                    if(t != "=") r.fail("only equality constraints are supported");
                    expect_rhs = true;
                    continue;
                }
                if(is_number(t)) {
                    coef = sign * r.number<double>(t);
                    sign = 1.0;
                    continue;
                }
                const var_id v = variable(t);
                const double c = coef.value_or(sign);
                coef.reset();
                sign = 1.0;
                if(sec == section::objective) {
                    if(auto [it, fresh] = costs.emplace(v, c); !fresh) it->second += c;
                } else {
                    if(rows.empty()) rows.push_back({});
                    rows.back().terms.emplace_back(v, c);
                }
            }
        }
        if(sec != section::done) r.fail("missing End");
        if(expect_rhs || (!rows.empty() && !rows.back().rhs)) r.fail("constraint without right-hand side");
        if(!any_var) throw parse_error(file + ": no variables");
        if(binaries.size() != std::size_t(max_var) + 1)
            throw parse_error(file + ": Binary section must list x0..x" + std::to_string(max_var));

        std::vector<double> c(max_var + 1, 0.0);
        for(const auto& [v, val] : costs) c[v] = val;
        ilp_instance inst(std::move(c));
        for(const auto& pr : rows) {
            linear_row row;
            for(const auto& [v, val] : pr.terms) {
                if(val != std::floor(val)) throw parse_error(file, pr.line, "constraint coefficients must be integers");
                row.variables.push_back(v);
                row.coefficients.push_back(static_cast<long long>(val));
            }
            row.rhs = *pr.rhs;
            try {
                inst.add_constraint(row);
            } catch(const empty_feasible_set& e) {
                throw parse_error(file, pr.line, e.what());
            } catch(const parse_error&) {
                throw;
            } catch(const error& e) {
                throw parse_error(file, pr.line, e.what());
            }
        }
        return inst;
    }

    inline void write_lp(const ilp_instance& inst, const std::string& path) { detail::write_file(path, format_lp(inst)); }
    inline ilp_instance read_lp(const std::string& path) { return parse_lp(detail::read_file(path), path); }

    // ---- convergence log ----

    inline constexpr const char* convergence_header = "time_s,iteration,kind,dual_objective,relative_dual_gap,primal_objective,primal_dual_gap";

    inline void write_convergence_log(std::ostream& sink, std::span<const convergence_row> rows)
    {
        auto num = [](double v) { return std::isnan(v) ? std::string() : detail::format_double(v); };
        sink << convergence_header << '\n';
        char t[32];
        for(const auto& r : rows) {
            std::snprintf(t, sizeof t, "%.6f", r.time_s);
            sink << t << ',' << r.iteration << ',' << r.kind << ',' << num(r.dual_objective) << ',' << num(r.relative_dual_gap) << ','
                 << num(r.primal_objective) << ',' << num(r.primal_dual_gap) << '\n';
        }
    }

    // ---- solution summaries ----

    namespace detail {
        inline nlohmann::ordered_json finite_or_null(double v)
        {
            if(std::isfinite(v)) return v;
            return nullptr;
        }
    }

    inline nlohmann::ordered_json solution_json(const solve_result& r)
    {
        nlohmann::ordered_json j;
        j["status"] = r.found ? (r.gap.certified ? "certified" : "feasible") : (r.infeasible ? "infeasible" : "no_solution");
        j["objective"] = detail::finite_or_null(r.found ? r.gap.primal : std::numeric_limits<double>::infinity());
        j["dual_bound"] = detail::finite_or_null(r.best_dual);
        j["gap"] = detail::finite_or_null(r.found ? r.gap.primal_dual_gap : std::numeric_limits<double>::infinity());
        j["certified"] = r.found && r.gap.certified;
        j["iterations"] = r.iterations;
        j["quasi_newton_steps"] = r.qn_steps;
        j["fixing_fraction"] = r.fixing_fraction;
        j["primal_attempts"] = r.primal_attempts;
        std::vector<std::size_t> ones;
        for(std::size_t i = 0; i < r.assignment.size(); ++i)
            if(r.assignment[i]) ones.push_back(i);
        j["assignment"] = ones;
        return j;
    }

    inline nlohmann::ordered_json matching_json(const solve_result& r, const matching& m)
    {
        nlohmann::ordered_json j = solution_json(r);
        j.erase("assignment");
        j["selected"] = m.selected;
        nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
        for(const auto& [a, b] : m.pairs) pairs.push_back({a, b});
        j["pairs"] = pairs;
        j["point_map"] = m.point_map;
        return j;
    }

    inline void write_json(const nlohmann::ordered_json& j, const std::string& path) { detail::write_file(path, j.dump(2) + "\n"); }

    // 0-1 vector from a solution file's "assignment" (or "selected") index list.
    inline std::vector<char> read_solution_assignment(const std::string& path, std::size_t nr_variables)
    {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(detail::read_file(path));
        } catch(const nlohmann::json::exception& e) {
            throw parse_error(path + ": " + e.what());
        }
        const char* key = j.contains("assignment") ? "assignment" : "selected";
        if(!j.contains(key) || !j[key].is_array())
            throw parse_error(path + ": expected an 'assignment' or 'selected' index list");
        std::vector<char> x(nr_variables, 0);
        for(const auto& v : j[key]) {
            if(!v.is_number_unsigned() || v.get<std::size_t>() >= nr_variables)
                throw parse_error(path + ": index out of range for " + std::to_string(nr_variables) + " variables");
            x[v.get<std::size_t>()] = 1;
        }
        return x;
    }

    // ---- hierarchy manifest ----

    struct hierarchy_input {
        std::vector<resolution_level> levels_m, levels_n;
        std::vector<feature_matrix> features_m, features_n;
    };

    inline std::vector<std::uint32_t> read_projection_map(const std::string& path)
    {
        detail::line_reader r(detail::read_file(path), path);
        std::vector<std::uint32_t> out;
        std::vector<std::string> tok;
        while(r.next(tok))
            for(const auto& t : tok) out.push_back(r.number<std::uint32_t>(t));
        return out;
    }

    // key = value lines: levels, level<k>.mesh_a, .mesh_b, .features_a,
    // .features_b and, for k > 0, optional .map_a / .map_b (nearest vertex when absent).
    // Relative paths are resolved against the manifest's directory.
    inline hierarchy_input read_manifest(const std::string& path)
    {
        detail::line_reader r(detail::read_file(path), path);
        std::map<std::string, std::string> kv;
        std::vector<std::string> tok;
        while(r.next(tok)) {
            if(tok.size() != 3 || tok[1] != "=") r.fail("expected 'key = value'");
            if(!kv.emplace(tok[0], tok[2]).second) r.fail("duplicate key '" + tok[0] + "'");
        }
        const auto base = std::filesystem::path(path).parent_path();
        auto get = [&](const std::string& key, bool required) -> std::optional<std::string> {
            const auto it = kv.find(key);
            if(it == kv.end()) {
                if(required) throw parse_error(path + ": missing key '" + key + "'");
                return std::nullopt;
            }
            const std::filesystem::path p(it->second);
            return (p.is_absolute() ? p : base / p).string();
        };
        if(!kv.count("levels")) throw parse_error(path + ": missing key 'levels'");
        const auto nr_levels = r.number<std::size_t>(kv["levels"]);
        if(nr_levels == 0) throw parse_error(path + ": at least one level is required");
        hierarchy_input h;
        for(std::size_t l = 0; l < nr_levels; ++l) {
            const std::string p = "level" + std::to_string(l) + ".";
            mesh a = read_mesh(*get(p + "mesh_a", true));
            mesh b = read_mesh(*get(p + "mesh_b", true));
            h.features_m.push_back(read_features(*get(p + "features_a", true)));
            h.features_n.push_back(read_features(*get(p + "features_b", true)));
            check_feature_rows(h.features_m.back(), a.nr_vertices(), p + "features_a");
            check_feature_rows(h.features_n.back(), b.nr_vertices(), p + "features_b");
            std::vector<std::uint32_t> map_a, map_b;
            if(l > 0) {
                const auto ma = get(p + "map_a", false);
                const auto mb = get(p + "map_b", false);
                map_a = ma ? read_projection_map(*ma) : nearest_vertex_map(a, h.levels_m.back().shape);
                map_b = mb ? read_projection_map(*mb) : nearest_vertex_map(b, h.levels_n.back().shape);
            }
            h.levels_m.push_back({std::move(a), std::move(map_a)});
            h.levels_n.push_back({std::move(b), std::move(map_b)});
        }
        return h;
    }

}
