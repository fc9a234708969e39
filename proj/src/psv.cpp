#include "clinproj/psv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace clinproj {

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

double parse_value(const std::string& s, const std::string& where) {
    if (s.empty() || s == "NaN" || s == "nan" || s == "NA") return std::nan("");
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw PsvError(where + ": bad numeric value '" + s + "'");
    }
}

std::vector<std::string> split_psv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == '|') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

const std::map<std::string, std::string>& aliases() {
    static const std::map<std::string, std::string> m = {
        {"HR", "HeartRate"},
        {"Hct", "HCT"},
        {"Bilirubin_direct", "BilirubinDirect"},
        {"Bilirubin_total", "BilirubinTotal"},
    };
    return m;
}

std::string canonical_name(const std::string& col) {
    auto it = aliases().find(col);
    return it == aliases().end() ? col : it->second;
}

}  // namespace

PatientRecord read_patient_psv(const std::string& path, const VitalRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw PsvError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw PsvError(path + ": empty file");

    std::vector<std::string> header = split_psv(line);
    std::vector<int> vital_col(registry.size(), -1);
    int age_col = -1, gender_col = -1, label_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string name = canonical_name(header[c]);
        if (name == "Age")
            age_col = static_cast<int>(c);
        else if (name == "Gender")
            gender_col = static_cast<int>(c);
        else if (name == "SepsisLabel")
            label_col = static_cast<int>(c);
        else {
            int v = registry.index_of(name);
            if (v >= 0) vital_col[static_cast<std::size_t>(v)] = static_cast<int>(c);
        }
    }
    for (std::size_t v = 0; v < registry.size(); ++v)
        if (vital_col[v] < 0)
            throw PsvError(path + ": missing column " + registry.at(v).name);
    if (label_col < 0) throw PsvError(path + ": missing SepsisLabel column");

    std::vector<std::vector<std::string>> body;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        body.push_back(split_psv(line));
        if (body.back().size() != header.size())
            throw PsvError(path + ": row " + std::to_string(body.size()) + " has " +
                           std::to_string(body.back().size()) + " fields, header has " +
                           std::to_string(header.size()));
    }
    if (body.empty()) throw PsvError(path + ": no data rows");

    PatientRecord rec;
    rec.patient_id = fs::path(path).stem().string();
    const int T = static_cast<int>(body.size());
    rec.values.resize(static_cast<Eigen::Index>(registry.size()), T);
    rec.sepsis_label.resize(static_cast<std::size_t>(T), 0);
    for (int t = 0; t < T; ++t) {
        const auto& row = body[static_cast<std::size_t>(t)];
        std::string where = path + ":row" + std::to_string(t + 1);
        for (std::size_t v = 0; v < registry.size(); ++v)
            rec.values(static_cast<Eigen::Index>(v), t) =
                parse_value(row[static_cast<std::size_t>(vital_col[v])], where);
        double lbl = parse_value(row[static_cast<std::size_t>(label_col)], where);
        rec.sepsis_label[static_cast<std::size_t>(t)] = std::isnan(lbl) ? 0 : (lbl != 0.0 ? 1 : 0);
    }
    double age = age_col >= 0 ? parse_value(body[0][static_cast<std::size_t>(age_col)], path) : std::nan("");
    double gender = gender_col >= 0 ? parse_value(body[0][static_cast<std::size_t>(gender_col)], path) : std::nan("");
    rec.age = std::isnan(age) ? 62.0 : age;
    rec.gender = (!std::isnan(gender) && gender != 0.0) ? 1 : 0;
    return rec;
}

void write_patient_psv(const std::string& path, const PatientRecord& record,
                       const VitalRegistry& registry) {
    std::ofstream out(path);
    if (!out) throw PsvError("cannot write " + path);
    for (std::size_t v = 0; v < registry.size(); ++v) out << registry.at(v).name << '|';
    out << "Age|Gender|SepsisLabel\n";
    for (int t = 0; t < record.hours(); ++t) {
        for (Eigen::Index v = 0; v < record.values.rows(); ++v)
            out << format_double(record.values(v, t)) << '|';
        out << format_double(record.age) << '|' << record.gender << '|'
            << record.sepsis_label[static_cast<std::size_t>(t)] << '\n';
    }
}

std::vector<PatientRecord> read_cohort_dir(const std::string& dir, const VitalRegistry& registry) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".psv")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw PsvError("no .psv files in " + dir);
    std::vector<PatientRecord> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(read_patient_psv(f, registry));
    return out;
}

void write_cohort_dir(const std::string& dir, const std::vector<PatientRecord>& records,
                      const VitalRegistry& registry) {
    fs::create_directories(dir);
    for (const auto& r : records)
        write_patient_psv((fs::path(dir) / (r.patient_id + ".psv")).string(), r, registry);
}

void write_subpatient_table(const std::string& path, const SubPatientTable& table,
                            const VitalRegistry& registry) {
    std::ofstream out(path);
    if (!out) throw PsvError("cannot write " + path);
    const std::size_t V = registry.size();
    int W = table.rows.empty() ? 0 : static_cast<int>(table.rows.front().data.cols());

    out << "sub_id|patient_id|window_start|Age|Gender|SOFA|SIRS";
    for (std::size_t v = 0; v < V; ++v)
        for (int t = 0; t < W; ++t) out << '|' << registry.at(v).name << "_h" << t;
    out << "|SepsisLabel";
    if (!table.phys_dist.empty())
        for (std::size_t v = 0; v < V; ++v) out << '|' << registry.at(v).name << "_physdist";
    if (!table.trust.empty())
        for (std::size_t v = 0; v < V; ++v) out << '|' << registry.at(v).name << "_trust";
    out << '\n';

    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const SubPatient& sp = table.rows[i];
        out << sp.sub_id << '|' << sp.patient_id << '|' << sp.window_start << '|'
            << format_double(sp.age) << '|' << sp.gender << '|' << sp.sofa << '|' << sp.sirs;
        for (std::size_t v = 0; v < V; ++v)
            for (int t = 0; t < W; ++t)
                out << '|' << format_double(sp.data(static_cast<Eigen::Index>(v), t));
        out << '|' << sp.label;
        if (!table.phys_dist.empty())
            for (std::size_t v = 0; v < V; ++v)
                out << '|' << format_double(table.phys_dist[i][static_cast<Eigen::Index>(v)]);
        if (!table.trust.empty())
            for (std::size_t v = 0; v < V; ++v)
                out << '|' << format_double(table.trust[i][static_cast<Eigen::Index>(v)]);
        out << '\n';
    }
}

SubPatientTable read_subpatient_table(const std::string& path, const VitalRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw PsvError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw PsvError(path + ": empty file");
    std::vector<std::string> header = split_psv(line);
    std::map<std::string, int> col;
    for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = static_cast<int>(c);

    auto need = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) throw PsvError(path + ": missing column " + name);
        return it->second;
    };
    const std::size_t V = registry.size();
    int W = 0;
    while (col.count(registry.at(0).name + "_h" + std::to_string(W))) ++W;
    if (W == 0) throw PsvError(path + ": no window value columns");

    bool has_pd = col.count(registry.at(0).name + "_physdist") > 0;
    bool has_tr = col.count(registry.at(0).name + "_trust") > 0;

    SubPatientTable table;
    int sub_c = need("sub_id"), pat_c = need("patient_id"), ws_c = need("window_start");
    int age_c = need("Age"), gen_c = need("Gender"), sofa_c = need("SOFA"), sirs_c = need("SIRS");
    int lbl_c = need("SepsisLabel");

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_psv(line);
        if (row.size() != header.size())
            throw PsvError(path + ": row width mismatch at data row " +
                           std::to_string(table.rows.size() + 1));
        std::string where = path + ":" + std::to_string(table.rows.size() + 1);
        SubPatient sp;
        sp.sub_id = row[static_cast<std::size_t>(sub_c)];
        sp.patient_id = row[static_cast<std::size_t>(pat_c)];
        sp.window_start = static_cast<int>(parse_value(row[static_cast<std::size_t>(ws_c)], where));
        sp.age = parse_value(row[static_cast<std::size_t>(age_c)], where);
        sp.gender = static_cast<int>(parse_value(row[static_cast<std::size_t>(gen_c)], where));
        sp.sofa = static_cast<int>(parse_value(row[static_cast<std::size_t>(sofa_c)], where));
        sp.sirs = static_cast<int>(parse_value(row[static_cast<std::size_t>(sirs_c)], where));
        sp.label = static_cast<int>(parse_value(row[static_cast<std::size_t>(lbl_c)], where));
        sp.data.resize(static_cast<Eigen::Index>(V), W);
        for (std::size_t v = 0; v < V; ++v)
            for (int t = 0; t < W; ++t)
                sp.data(static_cast<Eigen::Index>(v), t) = parse_value(
                    row[static_cast<std::size_t>(need(registry.at(v).name + "_h" + std::to_string(t)))],
                    where);
        if (has_pd) {
            Eigen::VectorXd pd(static_cast<Eigen::Index>(V));
            for (std::size_t v = 0; v < V; ++v)
                pd[static_cast<Eigen::Index>(v)] = parse_value(
                    row[static_cast<std::size_t>(need(registry.at(v).name + "_physdist"))], where);
            table.phys_dist.push_back(std::move(pd));
        }
        if (has_tr) {
            Eigen::VectorXd tr(static_cast<Eigen::Index>(V));
            for (std::size_t v = 0; v < V; ++v)
                tr[static_cast<Eigen::Index>(v)] = parse_value(
                    row[static_cast<std::size_t>(need(registry.at(v).name + "_trust"))], where);
            table.trust.push_back(std::move(tr));
        }
        table.rows.push_back(std::move(sp));
    }
    return table;
}

}  // namespace clinproj
