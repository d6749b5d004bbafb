#include "gars/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gars {

using nlohmann::json;

bool PreferenceDataset::has_judge() const {
    for (const auto& r : rows)
        if (r.judge.has_value()) return true;
    return false;
}

bool PreferenceDataset::judge_complete() const {
    for (const auto& r : rows)
        if (!r.judge.has_value() || !r.judge->complete()) return false;
    return !rows.empty();
}

std::size_t PreferenceDataset::total_selected() const {
    std::size_t t = 0;
    for (const auto& r : rows) t += r.pairs.size();
    return t;
}

void PreferenceDataset::validate() const {
    const int K = items.K, C = scheme.C;
    if (static_cast<int>(rows.size()) != n())
        throw ValidationError("dataset: row count does not match context count");
    if (!contexts.allFinite()) throw ValidationError("dataset: non-finite feature values");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::set<std::pair<int, int>> seen;
        for (const auto& pl : rows[i].pairs) {
            if (pl.j < 0 || pl.j >= K || pl.k < 0 || pl.k >= K)
                throw ValidationError("dataset row " + std::to_string(i) +
                                      ": item index out of range");
            if (pl.j == pl.k)
                throw ValidationError("dataset row " + std::to_string(i) +
                                      ": diagonal pair (" + std::to_string(pl.j) + "," +
                                      std::to_string(pl.k) + ")");
            if (pl.label < 0 || pl.label >= C)
                throw ValidationError("dataset row " + std::to_string(i) +
                                      ": label out of range");
            if (!seen.insert({pl.j, pl.k}).second)
                throw ValidationError("dataset row " + std::to_string(i) +
                                      ": duplicate pair (" + std::to_string(pl.j) + "," +
                                      std::to_string(pl.k) + ")");
        }
        if (rows[i].judge.has_value()) {
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k) {
                    if (j == k || !rows[i].judge->has(j, k)) continue;
                    const auto p = rows[i].judge->probs(j, k);
                    if (p.minCoeff() < -1e-12 || std::fabs(p.sum() - 1.0) > 1e-9)
                        throw ValidationError("dataset row " + std::to_string(i) +
                                              ": judge vector for (" + std::to_string(j) +
                                              "," + std::to_string(k) +
                                              ") is not on the probability simplex");
                }
        }
    }
}

namespace {

VectorXd parse_vector(const json& arr, const char* what, int line_no) {
    if (!arr.is_array())
        throw ParseError("line " + std::to_string(line_no) + ": " + what + " must be an array");
    VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
    return v;
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
    throw ParseError("line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

PreferenceDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file: " + path);

    std::string line;
    int line_no = 0;
    PreferenceDataset ds;
    bool have_meta = false;
    int p_dim = -1;
    std::vector<VectorXd> contexts;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            fail(line_no, std::string("invalid JSON: ") + e.what());
        }
        const std::string type = obj.value("type", "");
        if (type == "meta") {
            if (have_meta) fail(line_no, "duplicate meta line");
            const int K = obj.value("K", 0);
            const int C = obj.value("C", 0);
            if (K < 2) fail(line_no, "meta: K must be >= 2");
            if (C < 2) fail(line_no, "meta: C must be >= 2");
            ds.items = ItemSet(K);
            if (obj.contains("weights")) {
                const auto& w = obj["weights"];
                VectorXd w1 = parse_vector(w.at("w1"), "weights.w1", line_no);
                VectorXd w2 = parse_vector(w.at("w2"), "weights.w2", line_no);
                if (w1.size() != C || w2.size() != C) fail(line_no, "meta: weight length != C");
                ds.scheme = CategoryScheme(C, std::move(w1), std::move(w2));
            } else {
                try {
                    ds.scheme = CategoryScheme::defaults(C);
                } catch (const ValidationError& e) {
                    fail(line_no, e.what());
                }
            }
            have_meta = true;
        } else if (type == "row") {
            if (!have_meta) fail(line_no, "row before meta line");
            const int K = ds.items.K, C = ds.scheme.C;
            VectorXd ctx = parse_vector(obj.at("context"), "context", line_no);
            if (p_dim < 0)
                p_dim = static_cast<int>(ctx.size());
            else if (ctx.size() != p_dim)
                fail(line_no, "context dimension " + std::to_string(ctx.size()) +
                                  " != " + std::to_string(p_dim));
            DatasetRow row;
            std::set<std::pair<int, int>> seen;
            if (!obj.contains("pairs") || !obj["pairs"].is_array())
                fail(line_no, "row: missing pairs array");
            for (const auto& pr : obj["pairs"]) {
                PairLabel pl{pr.value("j", -1), pr.value("k", -1), pr.value("label", -1)};
                if (pl.j < 0 || pl.j >= K || pl.k < 0 || pl.k >= K)
                    fail(line_no, "pair references item >= K");
                if (pl.j == pl.k) fail(line_no, "diagonal pair (" + std::to_string(pl.j) + "," +
                                                    std::to_string(pl.k) + ")");
                if (pl.label < 0 || pl.label >= C) fail(line_no, "label out of range");
                if (!seen.insert({pl.j, pl.k}).second)
                    fail(line_no, "duplicate pair in row");
                row.pairs.push_back(pl);
            }
            if (obj.contains("judge")) {
                JudgeTable jt(K, C);
                for (const auto& je : obj["judge"]) {
                    const int j = je.value("j", -1), k = je.value("k", -1);
                    if (j < 0 || j >= K || k < 0 || k >= K || j == k)
                        fail(line_no, "judge entry references invalid pair");
                    VectorXd pv = parse_vector(je.at("probs"), "judge.probs", line_no);
                    if (pv.size() != C) fail(line_no, "judge probs length != C");
                    if (pv.minCoeff() < -1e-12 || std::fabs(pv.sum() - 1.0) > 1e-9)
                        fail(line_no, "judge vector not on the simplex (sums to " +
                                          std::to_string(pv.sum()) + ")");
                    jt.set(j, k, pv);
                }
                row.judge = std::move(jt);
            }
            contexts.push_back(std::move(ctx));
            ds.rows.push_back(std::move(row));
        } else {
            fail(line_no, "unknown line type '" + type + "'");
        }
    }
    if (!have_meta) throw ParseError("dataset has no meta line: " + path);
    ds.contexts.resize(contexts.size(), p_dim < 0 ? 0 : p_dim);
    for (std::size_t i = 0; i < contexts.size(); ++i) ds.contexts.row(i) = contexts[i];
    ds.validate();
    return ds;
}

void save_dataset(const PreferenceDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open for writing: " + path);
    json meta{{"type", "meta"},
              {"K", ds.items.K},
              {"C", ds.scheme.C},
              {"weights",
               {{"w1", std::vector<double>(ds.scheme.w1.data(), ds.scheme.w1.data() + ds.scheme.C)},
                {"w2", std::vector<double>(ds.scheme.w2.data(), ds.scheme.w2.data() + ds.scheme.C)}}}};
    out << meta.dump() << "\n";
    const int K = ds.items.K;
    for (int i = 0; i < ds.n(); ++i) {
        json row{{"type", "row"}};
        std::vector<double> ctx(ds.p());
        for (int c = 0; c < ds.p(); ++c) ctx[c] = ds.contexts(i, c);
        row["context"] = std::move(ctx);
        json pairs = json::array();
        for (const auto& pl : ds.rows[i].pairs)
            pairs.push_back({{"j", pl.j}, {"k", pl.k}, {"label", pl.label}});
        row["pairs"] = std::move(pairs);
        if (ds.rows[i].judge.has_value()) {
            json jarr = json::array();
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k) {
                    if (j == k || !ds.rows[i].judge->has(j, k)) continue;
                    const auto pv = ds.rows[i].judge->probs(j, k);
                    std::vector<double> pvec(pv.size());
                    for (int c = 0; c < pv.size(); ++c) pvec[c] = pv(c);
                    jarr.push_back({{"j", j}, {"k", k}, {"probs", std::move(pvec)}});
                }
            row["judge"] = std::move(jarr);
        }
        out << row.dump() << "\n";
    }
}

}  // namespace gars
