#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade/harness.hpp"

namespace cascade {

// Shortest round-trip decimal form; keeps emitted CSV/JSON byte-stable.
inline std::string fmt_double(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

inline std::string fmt_sig6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

// "2.60x10^4" in UTF-8 superscripts, the notation regret tables use.
inline std::string sci_utf8(double x, int sig = 3) {
    if (x == 0.0) return "0";
    static const char* sup[] = {"⁰", "¹", "²", "³", "⁴",
                                "⁵", "⁶", "⁷", "⁸", "⁹"};
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*e", sig - 1, x);
    std::string s(buf);
    auto epos = s.find('e');
    std::string mantissa = s.substr(0, epos);
    int exponent = std::atoi(s.c_str() + epos + 1);
    std::string out = mantissa + "×10";
    if (exponent < 0) {
        out += "⁻";
        exponent = -exponent;
    }
    std::string digits = std::to_string(exponent);
    for (char c : digits) out += sup[c - '0'];
    return out;
}

// Human-readable summary, policies in descending order of mean regret.
inline std::string format_table(const ExperimentResult& res) {
    std::vector<const PolicyResult*> order;
    for (const auto& p : res.policies) order.push_back(&p);
    std::sort(order.begin(), order.end(), [](const PolicyResult* a, const PolicyResult* b) {
        return a->mean_regret > b->mean_regret ||
               (a->mean_regret == b->mean_regret && a->label < b->label);
    });
    size_t name_w = 8;
    for (const auto* p : order) name_w = std::max(name_w, p->label.size());
    std::string out;
    out += "Policy";
    out.append(name_w - 4, ' ');
    out += "Reg(T)                  Running time (s)\n";
    for (const auto* p : order) {
        std::string reg = sci_utf8(p->mean_regret) + " ± " + sci_utf8(p->std_regret);
        // the UTF-8 marks are multi-byte; pad by display width
        size_t display = 0;
        for (size_t i = 0; i < reg.size(); ++i)
            if ((reg[i] & 0xc0) != 0x80) ++display;
        out += p->label;
        out.append(name_w + 2 - p->label.size(), ' ');
        out += reg;
        out.append(display < 22 ? 24 - display : 2, ' ');
        out += sci_utf8(p->mean_seconds) + "\n";
    }
    return out;
}

inline void write_results_csv(const ExperimentResult& res, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "policy,run,T,final_regret,seconds\n";
    for (const auto& p : res.policies)
        for (const auto& r : p.runs)
            out << p.label << ',' << r.run << ',' << res.horizon << ','
                << fmt_double(r.final_regret) << ',' << fmt_double(r.seconds) << '\n';
}

inline void write_trajectories_csv(const ExperimentResult& res, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "policy,run,t,cum_regret\n";
    for (const auto& p : res.policies)
        for (const auto& r : p.runs)
            for (const auto& [t, reg] : r.trajectory)
                out << p.label << ',' << r.run << ',' << t << ',' << fmt_double(reg) << '\n';
}

inline nlohmann::json result_to_json(const ExperimentResult& res) {
    nlohmann::json j;
    j["config"] = res.config;
    j["T"] = res.horizon;
    j["runs"] = res.runs;
    j["checkpoints"] = res.checkpoints;
    j["error_bar_scale"] = res.error_bar_scale;
    j["policies"] = nlohmann::json::array();
    for (const auto& p : res.policies) {
        nlohmann::json pj;
        pj["label"] = p.label;
        pj["mean_regret"] = p.mean_regret;
        pj["std_regret"] = p.std_regret;
        pj["mean_seconds"] = p.mean_seconds;
        pj["runs"] = nlohmann::json::array();
        for (const auto& r : p.runs) {
            nlohmann::json rj;
            rj["run"] = r.run;
            rj["final_regret"] = r.final_regret;
            rj["realized_reward"] = r.realized_reward;
            rj["seconds"] = r.seconds;
            rj["trajectory"] = r.trajectory;
            pj["runs"].push_back(std::move(rj));
        }
        j["policies"].push_back(std::move(pj));
    }
    return j;
}

inline ExperimentResult result_from_json(const nlohmann::json& j) {
    ExperimentResult res;
    res.config = j.value("config", nlohmann::json::object());
    res.horizon = j.at("T").get<std::int64_t>();
    res.runs = j.at("runs").get<int>();
    res.checkpoints = j.at("checkpoints").get<std::vector<std::int64_t>>();
    res.error_bar_scale = j.value("error_bar_scale", 1.0);
    for (const auto& pj : j.at("policies")) {
        PolicyResult p;
        p.label = pj.at("label").get<std::string>();
        p.mean_regret = pj.at("mean_regret").get<double>();
        p.std_regret = pj.at("std_regret").get<double>();
        p.mean_seconds = pj.at("mean_seconds").get<double>();
        for (const auto& rj : pj.at("runs")) {
            RunResult r;
            r.run = rj.at("run").get<int>();
            r.final_regret = rj.at("final_regret").get<double>();
            r.realized_reward = rj.value("realized_reward", 0.0);
            r.seconds = rj.at("seconds").get<double>();
            r.trajectory =
                rj.at("trajectory").get<std::vector<std::pair<std::int64_t, double>>>();
            p.runs.push_back(std::move(r));
        }
        res.policies.push_back(std::move(p));
    }
    return res;
}

inline void write_result_json(const ExperimentResult& res, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << result_to_json(res).dump(1) << "\n";
}

// Self-contained SVG: one mean-regret polyline per policy with error bars of
// half-length std/sqrt(runs) * error_bar_scale at every checkpoint.
inline void write_svg(const ExperimentResult& res, const std::string& path) {
    for (const auto& p : res.policies)
        for (const auto& r : p.runs)
            if (r.trajectory.empty()) throw std::runtime_error("write_svg: empty trajectory");

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    const double width = 840.0, height = 560.0;
    const double ml = 90.0, mr = 30.0, mt = 30.0, mb = 60.0;
    const double pw = width - ml - mr, ph = height - mt - mb;

    struct Series {
        std::vector<double> mean, err;
    };
    std::vector<Series> series(res.policies.size());
    double y_max = 0.0;
    const size_t n_cp = res.checkpoints.size();
    for (size_t p = 0; p < res.policies.size(); ++p) {
        series[p].mean.assign(n_cp, 0.0);
        series[p].err.assign(n_cp, 0.0);
        const auto& runs = res.policies[p].runs;
        for (size_t c = 0; c < n_cp; ++c) {
            double sum = 0.0, sum_sq = 0.0;
            int n = 0;
            for (const auto& r : runs) {
                if (c >= r.trajectory.size()) continue;
                double v = r.trajectory[c].second;
                sum += v;
                sum_sq += v * v;
                ++n;
            }
            if (n == 0) continue;
            double mean = sum / n;
            double sd = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
            series[p].mean[c] = mean;
            series[p].err[c] = sd / std::sqrt(static_cast<double>(n)) * res.error_bar_scale;
            y_max = std::max(y_max, mean + series[p].err[c]);
        }
    }
    if (y_max <= 0.0) y_max = 1.0;
    const double x_max = static_cast<double>(res.horizon);

    auto xm = [&](double t) { return ml + t / x_max * pw; };
    auto ym = [&](double v) { return mt + ph - v / y_max * ph; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_sig6(width) +
           "\" height=\"" + fmt_sig6(height) + "\" viewBox=\"0 0 " + fmt_sig6(width) + " " +
           fmt_sig6(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<rect x=\"" + fmt_sig6(ml) + "\" y=\"" + fmt_sig6(mt) + "\" width=\"" + fmt_sig6(pw) +
           "\" height=\"" + fmt_sig6(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        double tx = x_max * i / 5.0, vy = y_max * i / 5.0;
        svg += "<line x1=\"" + fmt_sig6(xm(tx)) + "\" y1=\"" + fmt_sig6(mt + ph) + "\" x2=\"" +
               fmt_sig6(xm(tx)) + "\" y2=\"" + fmt_sig6(mt + ph + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt_sig6(xm(tx)) + "\" y=\"" + fmt_sig6(mt + ph + 20) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
               fmt_sig6(tx) + "</text>\n";
        svg += "<line x1=\"" + fmt_sig6(ml - 5) + "\" y1=\"" + fmt_sig6(ym(vy)) + "\" x2=\"" +
               fmt_sig6(ml) + "\" y2=\"" + fmt_sig6(ym(vy)) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt_sig6(ml - 8) + "\" y=\"" + fmt_sig6(ym(vy) + 4) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
               fmt_sig6(vy) + "</text>\n";
    }
    svg += "<text x=\"" + fmt_sig6(ml + pw / 2) + "\" y=\"" + fmt_sig6(height - 15) +
           "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">t</text>\n";
    svg += "<text x=\"20\" y=\"" + fmt_sig6(mt + ph / 2) +
           "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 20 " +
           fmt_sig6(mt + ph / 2) + ")\">Reg(t)</text>\n";

    for (size_t p = 0; p < res.policies.size(); ++p) {
        const char* color = palette[p % 8];
        std::string pts;
        for (size_t c = 0; c < n_cp; ++c) {
            pts += fmt_sig6(xm(static_cast<double>(res.checkpoints[c]))) + "," +
                   fmt_sig6(ym(series[p].mean[c])) + " ";
        }
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"1.5\"/>\n";
        for (size_t c = 0; c < n_cp; ++c) {
            double e = series[p].err[c];
            if (e <= 0.0) continue;
            double x = xm(static_cast<double>(res.checkpoints[c]));
            double y1 = ym(series[p].mean[c] + e), y2 = ym(series[p].mean[c] - e);
            svg += "<line x1=\"" + fmt_sig6(x) + "\" y1=\"" + fmt_sig6(y1) + "\" x2=\"" +
                   fmt_sig6(x) + "\" y2=\"" + fmt_sig6(y2) + "\" stroke=\"" + color + "\"/>\n";
            svg += "<line x1=\"" + fmt_sig6(x - 3) + "\" y1=\"" + fmt_sig6(y1) + "\" x2=\"" +
                   fmt_sig6(x + 3) + "\" y2=\"" + fmt_sig6(y1) + "\" stroke=\"" + color + "\"/>\n";
            svg += "<line x1=\"" + fmt_sig6(x - 3) + "\" y1=\"" + fmt_sig6(y2) + "\" x2=\"" +
                   fmt_sig6(x + 3) + "\" y2=\"" + fmt_sig6(y2) + "\" stroke=\"" + color + "\"/>\n";
        }
    }

    for (size_t p = 0; p < res.policies.size(); ++p) {
        const char* color = palette[p % 8];
        double ly = mt + 18 + 18 * static_cast<double>(p);
        svg += "<line x1=\"" + fmt_sig6(ml + 12) + "\" y1=\"" + fmt_sig6(ly) + "\" x2=\"" +
               fmt_sig6(ml + 42) + "\" y2=\"" + fmt_sig6(ly) + "\" stroke=\"" + color +
               "\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"" + fmt_sig6(ml + 48) + "\" y=\"" + fmt_sig6(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + res.policies[p].label +
               "</text>\n";
    }
    svg += "</svg>\n";

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << svg;
}

// Write the full artifact set for a finished experiment and return the
// rendered table.
inline std::string emit_report(const ExperimentResult& res, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::filesystem::path dir(out_dir);
    write_result_json(res, (dir / "result.json").string());
    write_results_csv(res, (dir / "results.csv").string());
    write_trajectories_csv(res, (dir / "trajectories.csv").string());
    write_svg(res, (dir / "regret.svg").string());
    return format_table(res);
}

}  // namespace cascade
