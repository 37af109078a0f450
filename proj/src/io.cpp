#include "fungible/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fungible/errors.hpp"

namespace fungible {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace {

json parse_json(std::string_view text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string(what) + ": " + e.what());
    }
}

std::vector<std::string> variable_list(const json& node, const char* key, const char* prefix) {
    std::vector<std::string> out;
    if (!node.contains(key)) return out;
    const json& v = node.at(key);
    if (v.is_number_unsigned() || v.is_number_integer()) {
        const int count = v.get<int>();
        if (count < 0) throw InvalidInput(std::string(key) + " must be non-negative");
        for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
    } else if (v.is_array()) {
        for (const auto& name : v) out.push_back(name.get<std::string>());
    } else {
        throw InvalidInput(std::string(key) + " must be a count or a list of names");
    }
    return out;
}

int resolve_variable(const json& ref, const std::vector<std::string>& names) {
    if (ref.is_number_integer()) {
        const int i = ref.get<int>();
        if (i < 0 || i >= static_cast<int>(names.size()))
            throw InvalidInput("variable index " + std::to_string(i) + " out of range");
        return i;
    }
    const auto name = ref.get<std::string>();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw InvalidInput("unknown variable '" + name + "'");
}

}  // namespace

ModelSpec parse_model_json(std::string_view text) {
    const json doc = parse_json(text, "model file");
    try {
        std::vector<std::string> names = variable_list(doc, "observed", "v");
        const int p = static_cast<int>(names.size());
        for (auto& l : variable_list(doc, "latent", "f")) names.push_back(std::move(l));

        std::vector<std::string> params;
        if (doc.contains("parameters")) params = doc.at("parameters").get<std::vector<std::string>>();
        const bool declared = !params.empty();
        auto param_of = [&](const std::string& label) {
            for (std::size_t k = 0; k < params.size(); ++k)
                if (params[k] == label) return static_cast<int>(k);
            if (declared) throw InvalidInput("parameter '" + label + "' is not declared");
            params.push_back(label);
            return static_cast<int>(params.size() - 1);
        };

        auto entries = [&](const char* key) {
            std::vector<PatternEntry> out;
            if (!doc.contains(key)) return out;
            for (const auto& e : doc.at(key)) {
                PatternEntry pe;
                pe.row = resolve_variable(e.at("row"), names);
                pe.col = resolve_variable(e.at("col"), names);
                const bool has_param = e.contains("param");
                const bool has_value = e.contains("value");
                if (has_param == has_value)
                    throw InvalidInput(std::string(key) + " entries need exactly one of 'param' or 'value'");
                if (has_param)
                    pe.param = param_of(e.at("param").get<std::string>());
                else
                    pe.value = e.at("value").get<double>();
                out.push_back(pe);
            }
            return out;
        };
        auto directed = entries("directed");
        auto symmetric = entries("symmetric");

        std::optional<ParamVector> start;
        if (doc.contains("start_values")) {
            const json& sv = doc.at("start_values");
            ParamVector v(static_cast<Eigen::Index>(params.size()));
            if (sv.is_array()) {
                if (sv.size() != params.size())
                    throw InvalidInput("start_values has " + std::to_string(sv.size()) +
                                       " entries for " + std::to_string(params.size()) + " parameters");
                for (std::size_t k = 0; k < params.size(); ++k) v[k] = sv[k].get<double>();
            } else {
                for (std::size_t k = 0; k < params.size(); ++k) v[k] = sv.at(params[k]).get<double>();
            }
            start = std::move(v);
        }
        return ModelSpec(std::move(names), p, std::move(directed), std::move(symmetric),
                         std::move(params), std::move(start));
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("model file: ") + e.what());
    }
}

ModelSpec load_model(const std::filesystem::path& path) { return parse_model_json(read_file(path)); }

std::string model_to_json(const ModelSpec& model) {
    json doc;
    const auto& names = model.variable_names();
    doc["observed"] = std::vector<std::string>(names.begin(), names.begin() + model.n_observed());
    doc["latent"] = std::vector<std::string>(names.begin() + model.n_observed(), names.end());
    doc["parameters"] = model.theta_names();
    auto dump = [&](const std::vector<PatternEntry>& entries, bool upper_only) {
        json arr = json::array();
        for (const auto& e : entries) {
            if (upper_only && e.row > e.col) continue;
            json item{{"row", names[e.row]}, {"col", names[e.col]}};
            if (e.is_free())
                item["param"] = model.theta_names()[e.param];
            else
                item["value"] = e.value;
            arr.push_back(std::move(item));
        }
        return arr;
    };
    doc["directed"] = dump(model.directed(), false);
    doc["symmetric"] = dump(model.symmetric(), true);
    if (model.start_values()) {
        const auto& sv = *model.start_values();
        doc["start_values"] = std::vector<double>(sv.data(), sv.data() + sv.size());
    }
    return doc.dump(2) + "\n";
}

Matrix parse_covariance_csv(std::string_view text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        for (std::string cell; std::getline(cells, cell, ',');) {
            const auto first = cell.find_first_not_of(" \t");
            const auto last = cell.find_last_not_of(" \t");
            if (first == std::string::npos) throw InvalidInput("empty covariance cell");
            const std::string_view v(cell.data() + first, last - first + 1);
            double x = 0.0;
            const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
            if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x))
                throw InvalidInput("covariance cell is not a finite number: '" + std::string(v) + "'");
            row.push_back(x);
        }
        rows.push_back(std::move(row));
    }
    const auto p = static_cast<Eigen::Index>(rows.size());
    if (p == 0) throw InvalidInput("covariance file is empty");
    Matrix m(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != p)
            throw InvalidInput("covariance must be square: row " + std::to_string(i + 1) + " has " +
                               std::to_string(rows[i].size()) + " entries, expected " +
                               std::to_string(p));
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rows[i][j];
    }
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-10)
                throw InvalidInput("covariance is not symmetric at (" + std::to_string(i + 1) + "," +
                                   std::to_string(j + 1) + ")");
    return 0.5 * (m + m.transpose());
}

Matrix load_covariance(const std::filesystem::path& path) {
    return parse_covariance_csv(read_file(path));
}

std::string covariance_to_csv(const Matrix& m) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            char buf[64];
            const auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
            out << (j ? "," : "") << std::string_view(buf, res.ptr - buf);
        }
        out << '\n';
    }
    return out.str();
}

ParamVector parse_start_json(std::string_view text, const ModelSpec& model) {
    const json doc = parse_json(text, "start file");
    try {
        ParamVector v(model.n_params());
        if (doc.is_array()) {
            if (static_cast<int>(doc.size()) != model.n_params())
                throw InvalidInput("start vector has the wrong length");
            for (int k = 0; k < model.n_params(); ++k) v[k] = doc[k].get<double>();
        } else {
            v = model.default_start();
            for (const auto& [name, value] : doc.items()) v[model.param_index(name)] = value.get<double>();
        }
        model.check_theta(v);
        return v;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("start file: ") + e.what());
    }
}

StudyDesign parse_design_json(std::string_view text) {
    const json doc = parse_json(text, "study config");
    StudyDesign d;
    try {
        if (doc.contains("conditions")) d.conditions = doc.at("conditions").get<std::vector<std::string>>();
        if (doc.contains("sample_sizes")) d.sample_sizes = doc.at("sample_sizes").get<std::vector<long>>();
        if (doc.contains("epsilons")) d.epsilons = doc.at("epsilons").get<std::vector<double>>();
        if (doc.contains("replications")) d.replications = doc.at("replications").get<long>();
        if (doc.contains("seed")) d.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("population_confset"))
            d.population_confset = doc.at("population_confset").get<bool>();
        if (doc.contains("directions")) d.n_directions = doc.at("directions").get<int>();
        if (doc.contains("width_method"))
            d.width_method = parse_width_method(doc.at("width_method").get<std::string>());
        if (doc.contains("threads")) d.threads = doc.at("threads").get<int>();
        if (doc.contains("targets")) {
            const json& t = doc.at("targets");
            if (t.contains("confidence")) d.confidence.confidence = t.at("confidence").get<double>();
            if (t.contains("epsilon_tilde")) d.epsilon_tilde.epsilon_tilde = t.at("epsilon_tilde").get<double>();
            if (t.contains("delta_f")) d.delta_f.delta_f = t.at("delta_f").get<double>();
            if (t.contains("scaling")) d.delta_f.scaling = parse_scaling(t.at("scaling").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("study config: ") + e.what());
    }
    for (const auto& c : d.conditions) builtin_condition(c);  // rejects unknown labels
    d.validate();
    return d;
}

StudyDesign load_design(const std::filesystem::path& path) {
    return parse_design_json(read_file(path));
}

}  // namespace fungible
