#include "choicepred/csv.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "choicepred/errors.hpp"

namespace choicepred {

namespace {

const std::array<std::string, 10> kProblemColumns = {
    "Ha", "pHa", "La", "Hb", "pHb", "Lb", "LotNum", "LotShape", "Corr", "Amb"};
const std::array<std::string, 5> kLabelColumns = {"B1", "B2", "B3", "B4", "B5"};

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_number(const std::string& token, const std::string& where, const std::string& column) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw DataError(where + ": column '" + column + "': not a number: '" + token + "'");
    return v;
}

int parse_int(const std::string& token, const std::string& where, const std::string& column) {
    const double v = parse_number(token, where, column);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw DataError(where + ": column '" + column + "': not an integer: '" + token + "'");
    return i;
}

LotShape parse_lot_shape(const std::string& token, const std::string& where) {
    if (token == "-") return LotShape::None;
    if (token == "Symm") return LotShape::Symm;
    if (token == "R-skew") return LotShape::RSkew;
    if (token == "L-skew") return LotShape::LSkew;
    throw DataError(where + ": column 'LotShape': unknown token '" + token +
                    "' (expected -, Symm, R-skew or L-skew)");
}

// Atomic replace: write next to the target, then rename over it.
class AtomicWriter {
public:
    explicit AtomicWriter(const std::filesystem::path& path)
        : target_(path), temp_(path.string() + ".tmp"), out_(temp_) {
        if (!out_) throw DataError("cannot write file: " + path.string());
    }
    std::ofstream& stream() { return out_; }
    void commit() {
        out_.close();
        if (!out_) throw DataError("failed writing file: " + target_.string());
        std::filesystem::rename(temp_, target_);
    }

private:
    std::filesystem::path target_;
    std::filesystem::path temp_;
    std::ofstream out_;
};

std::string fixed6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

const std::string& lot_shape_token(LotShape shape) {
    static const std::string none = "-", symm = "Symm", r = "R-skew", l = "L-skew";
    switch (shape) {
        case LotShape::None: return none;
        case LotShape::Symm: return symm;
        case LotShape::RSkew: return r;
        case LotShape::LSkew: return l;
    }
    throw std::invalid_argument("invalid LotShape");
}

Problem parse_problem_row(const std::string& row, const std::string& where) {
    const auto fields = split_row(row);
    if (fields.size() != kProblemColumns.size())
        throw DataError(where + ": expected " + std::to_string(kProblemColumns.size()) +
                        " problem fields, got " + std::to_string(fields.size()));
    Problem p;
    p.ha = parse_number(fields[0], where, "Ha");
    p.pha = parse_number(fields[1], where, "pHa");
    p.la = parse_number(fields[2], where, "La");
    p.hb = parse_number(fields[3], where, "Hb");
    p.phb = parse_number(fields[4], where, "pHb");
    p.lb = parse_number(fields[5], where, "Lb");
    p.lot_num = parse_int(fields[6], where, "LotNum");
    p.lot_shape = parse_lot_shape(fields[7], where);
    p.corr = parse_int(fields[8], where, "Corr");
    p.amb = parse_int(fields[9], where, "Amb");
    try {
        validate(p);
    } catch (const std::invalid_argument& e) {
        throw DataError(where + ": " + e.what());
    }
    return p;
}

std::vector<LabeledProblem> read_problem_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw DataError("cannot read file: " + path.string());
    const std::string name = path.filename().string();

    std::string line;
    if (!std::getline(file, line)) throw DataError(name + ": empty file, header required");
    const auto header = split_row(line);

    for (std::size_t k = 0; k < kProblemColumns.size(); ++k) {
        if (k >= header.size() || header[k] != kProblemColumns[k])
            throw DataError(name + ":1: missing or misplaced column '" + kProblemColumns[k] +
                            "' in header");
    }
    bool labeled = header.size() > kProblemColumns.size();
    if (labeled) {
        for (std::size_t k = 0; k < kLabelColumns.size(); ++k) {
            const std::size_t pos = kProblemColumns.size() + k;
            if (pos >= header.size() || header[pos] != kLabelColumns[k])
                throw DataError(name + ":1: missing or misplaced column '" + kLabelColumns[k] +
                                "' in header");
        }
        if (header.size() != kProblemColumns.size() + kLabelColumns.size())
            throw DataError(name + ":1: unexpected extra columns after B5");
    }

    std::vector<LabeledProblem> out;
    std::size_t line_no = 1;
    while (std::getline(file, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = name + ":" + std::to_string(line_no);
        const auto fields = split_row(line);
        const std::size_t expected =
            kProblemColumns.size() + (labeled ? kLabelColumns.size() : 0);
        if (fields.size() != expected)
            throw DataError(where + ": expected " + std::to_string(expected) + " fields, got " +
                            std::to_string(fields.size()));

        LabeledProblem lp;
        std::string problem_part = fields[0];
        for (std::size_t k = 1; k < kProblemColumns.size(); ++k) problem_part += "," + fields[k];
        lp.problem = parse_problem_row(problem_part, where);
        if (labeled) {
            lp.labeled = true;
            for (std::size_t k = 0; k < kLabelColumns.size(); ++k) {
                const double b =
                    parse_number(fields[kProblemColumns.size() + k], where, kLabelColumns[k]);
                if (!(b >= 0.0 && b <= 1.0))
                    throw DataError(where + ": column '" + kLabelColumns[k] +
                                    "': B-rate must lie in [0,1]");
                lp.b_rates[k] = b;
            }
        }
        out.push_back(std::move(lp));
    }
    if (out.empty()) throw DataError(name + ": no data rows");
    return out;
}

namespace {

void write_problem_fields(std::ofstream& out, const Problem& p) {
    out << fixed6(p.ha) << "," << fixed6(p.pha) << "," << fixed6(p.la) << "," << fixed6(p.hb)
        << "," << fixed6(p.phb) << "," << fixed6(p.lb) << "," << p.lot_num << ","
        << lot_shape_token(p.lot_shape) << "," << p.corr << "," << p.amb;
}

}  // namespace

void write_problem_csv(const std::filesystem::path& path,
                       std::span<const LabeledProblem> problems, bool include_labels) {
    AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "Ha,pHa,La,Hb,pHb,Lb,LotNum,LotShape,Corr,Amb";
    if (include_labels) out << ",B1,B2,B3,B4,B5";
    out << "\n";
    for (const LabeledProblem& lp : problems) {
        write_problem_fields(out, lp.problem);
        if (include_labels) {
            for (double b : lp.b_rates) out << "," << fixed6(b);
        }
        out << "\n";
    }
    writer.commit();
}

void write_predictions_csv(const std::filesystem::path& path,
                           std::span<const LabeledProblem> problems,
                           std::span<const BlockPrediction> predictions) {
    if (problems.size() != predictions.size())
        throw std::invalid_argument("problem/prediction count mismatch");
    bool all_labeled = !problems.empty();
    for (const LabeledProblem& lp : problems) all_labeled = all_labeled && lp.labeled;

    AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "Ha,pHa,La,Hb,pHb,Lb,LotNum,LotShape,Corr,Amb,B1,B2,B3,B4,B5";
    if (all_labeled) out << ",SqDev1,SqDev2,SqDev3,SqDev4,SqDev5";
    out << "\n";
    for (std::size_t j = 0; j < problems.size(); ++j) {
        write_problem_fields(out, problems[j].problem);
        for (double b : predictions[j].b_rates) out << "," << fixed6(b);
        if (all_labeled) {
            for (int i = 0; i < 5; ++i) {
                const double d = problems[j].b_rates[static_cast<std::size_t>(i)] -
                                 predictions[j].b_rates[static_cast<std::size_t>(i)];
                out << "," << fixed6(d * d);
            }
        }
        out << "\n";
    }
    writer.commit();
}

void write_eval_csv(const std::filesystem::path& path,
                    std::span<const LabeledProblem> problems, const EvalReport& report) {
    if (problems.size() != report.predicted.size())
        throw std::invalid_argument("problem/report size mismatch");
    AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "problem,block,observed,predicted,sq_dev\n";
    for (std::size_t j = 0; j < problems.size(); ++j) {
        for (int i = 0; i < 5; ++i) {
            out << (j + 1) << "," << (i + 1) << ","
                << fixed6(problems[j].b_rates[static_cast<std::size_t>(i)]) << ","
                << fixed6(report.predicted[j][static_cast<std::size_t>(i)]) << ","
                << fixed6(report.sq_dev[j][static_cast<std::size_t>(i)]) << "\n";
        }
    }
    writer.commit();
}

}  // namespace choicepred
