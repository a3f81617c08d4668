#include "skinstack/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "skinstack/csv.hpp"
#include "skinstack/errors.hpp"

namespace skinstack {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const std::filesystem::path& path) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};

}  // namespace

std::string_view lesion_code(Lesion label) { return kLesionCodes[static_cast<std::size_t>(label)]; }

std::optional<Lesion> parse_lesion(std::string_view code) {
    for (std::size_t i = 0; i < kLesionCodes.size(); ++i)
        if (kLesionCodes[i] == code) return static_cast<Lesion>(i);
    return std::nullopt;
}

std::vector<MetadataRecord> load_metadata(const std::filesystem::path& path,
                                          const MetadataColumns& columns) {
    const auto table = csv::read(path);
    const auto id_col = find_column(table.header, columns.sample_id, path);
    const auto group_col = find_column(table.header, columns.group_id, path);
    const auto label_col = find_column(table.header, columns.label, path);

    std::vector<MetadataRecord> records;
    records.reserve(table.rows.size());
    std::unordered_set<std::string> seen;
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size())
            throw DataError(where(path, row.line) + ": expected " + std::to_string(table.header.size()) +
                            " fields, got " + std::to_string(row.fields.size()));
        const auto& id = row.fields[id_col];
        if (id.empty()) throw DataError(where(path, row.line) + ": empty sample id");
        const auto label = parse_lesion(row.fields[label_col]);
        if (!label)
            throw DataError(where(path, row.line) + ": unknown class code '" + row.fields[label_col] + "'");
        if (!seen.insert(id).second)
            throw DataError(where(path, row.line) + ": duplicate sample id '" + id + "'");
        records.push_back({id, row.fields[group_col], *label});
    }
    return records;
}

void write_metadata(const std::vector<MetadataRecord>& records, const std::filesystem::path& path) {
    std::string out = "sample_id,group_id,dx\n";
    for (const auto& r : records) {
        out += r.sample_id;
        out += ',';
        out += r.group_id;
        out += ',';
        out += lesion_code(r.label);
        out += '\n';
    }
    csv::write_file(path, out);
}

std::vector<MetadataRecord> dedup_by_group(const std::vector<MetadataRecord>& records) {
    std::vector<MetadataRecord> out;
    std::unordered_set<std::string> groups;
    for (const auto& r : records)
        if (groups.insert(r.group_id).second) out.push_back(r);
    return out;
}

std::array<std::size_t, kNumClasses> class_counts(const std::vector<MetadataRecord>& records) {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& r : records) ++counts[static_cast<std::size_t>(r.label)];
    return counts;
}

std::string_view split_name(Split split) { return kSplitNames[static_cast<std::size_t>(split)]; }

std::optional<Split> parse_split(std::string_view name) {
    for (std::size_t i = 0; i < kSplitNames.size(); ++i)
        if (kSplitNames[i] == name) return static_cast<Split>(i);
    return std::nullopt;
}

std::vector<std::string> SplitAssignment::ids_in(Split split) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < sample_ids.size(); ++i)
        if (splits[i] == split) out.push_back(sample_ids[i]);
    return out;
}

std::array<std::size_t, 3> SplitAssignment::sizes() const {
    std::array<std::size_t, 3> n{};
    for (auto s : splits) ++n[static_cast<std::size_t>(s)];
    return n;
}

SplitAssignment stratified_split(const std::vector<MetadataRecord>& records,
                                 const std::array<double, 3>& ratios, std::uint64_t seed) {
    for (double r : ratios)
        if (!(r > 0.0)) throw ValidationError("split ratios must be positive");
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");

    SplitAssignment out;
    out.sample_ids.reserve(records.size());
    out.splits.assign(records.size(), Split::train);
    for (const auto& r : records) out.sample_ids.push_back(r.sample_id);

    std::mt19937_64 rng(seed);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (static_cast<std::size_t>(records[i].label) == c) members.push_back(i);
        if (members.empty()) continue;
        if (members.size() < ratios.size())
            out.warnings.push_back("class " + std::string(kLesionCodes[c]) + " has only " +
                                   std::to_string(members.size()) +
                                   " records; assigning to train first");
        std::shuffle(members.begin(), members.end(), rng);

        const auto n = static_cast<double>(members.size());
        std::array<std::size_t, 3> take{};
        std::array<double, 3> frac{};
        std::size_t assigned = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            const double exact = ratios[s] * n;
            take[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
            frac[s] = exact - static_cast<double>(take[s]);
            assigned += take[s];
        }
        std::array<std::size_t, 3> order = {0, 1, 2};
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
        for (std::size_t k = 0; assigned < members.size(); k = (k + 1) % 3, ++assigned)
            ++take[order[k]];

        std::size_t pos = 0;
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t k = 0; k < take[s]; ++k) out.splits[members[pos++]] = static_cast<Split>(s);
    }
    return out;
}

void write_split(const SplitAssignment& assignment, const std::filesystem::path& path) {
    std::string out = "sample_id,split\n";
    for (std::size_t i = 0; i < assignment.sample_ids.size(); ++i) {
        out += assignment.sample_ids[i];
        out += ',';
        out += split_name(assignment.splits[i]);
        out += '\n';
    }
    csv::write_file(path, out);
}

std::unordered_map<std::string, Split> load_split(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    if (table.header != std::vector<std::string>{"sample_id", "split"})
        throw DataError(path.string() + ": expected header 'sample_id,split'");
    std::unordered_map<std::string, Split> out;
    for (const auto& row : table.rows) {
        if (row.fields.size() != 2) throw DataError(where(path, row.line) + ": expected 2 fields");
        const auto split = parse_split(row.fields[1]);
        if (!split) throw DataError(where(path, row.line) + ": unknown split '" + row.fields[1] + "'");
        if (!out.emplace(row.fields[0], *split).second)
            throw DataError(where(path, row.line) + ": duplicate sample id '" + row.fields[0] + "'");
    }
    return out;
}

void LogitTable::add(std::string sample_id, std::span<const double> logits) {
    if (logits.size() != kNumClasses)
        throw DataError("model " + model_id_ + ", sample " + sample_id + ": expected 7 logits, got " +
                        std::to_string(logits.size()));
    for (double v : logits)
        if (!std::isfinite(v)) throw DataError("model " + model_id_ + ", sample " + sample_id + ": non-finite logit");
    if (index_.contains(sample_id))
        throw DataError("model " + model_id_ + ": duplicate sample id '" + sample_id + "'");
    index_.emplace(sample_id, ids_.size());
    ids_.push_back(std::move(sample_id));
    values_.insert(values_.end(), logits.begin(), logits.end());
}

std::span<const double> LogitTable::row(std::size_t i) const {
    return {values_.data() + i * kNumClasses, kNumClasses};
}

std::span<const double> LogitTable::row(const std::string& sample_id) const {
    const auto it = index_.find(sample_id);
    if (it == index_.end())
        throw ValidationError("sample id '" + sample_id + "' missing from model " + model_id_);
    return row(it->second);
}

LogitTable load_logits(const std::filesystem::path& path, std::string model_id) {
    const auto table = csv::read(path);
    const std::vector<std::string> expected = {"sample_id", "z0", "z1", "z2", "z3", "z4", "z5", "z6"};
    if (table.header != expected)
        throw DataError(path.string() + ": expected header 'sample_id,z0,z1,z2,z3,z4,z5,z6'");

    LogitTable out(model_id.empty() ? path.stem().string() : std::move(model_id));
    std::array<double, kNumClasses> values{};
    for (const auto& row : table.rows) {
        if (row.fields.size() != expected.size())
            throw DataError(where(path, row.line) + ": expected 8 columns, got " +
                            std::to_string(row.fields.size()));
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            if (!csv::parse_double(row.fields[c + 1], values[c]))
                throw DataError(where(path, row.line) + ": cannot parse '" + row.fields[c + 1] + "'");
            if (!std::isfinite(values[c]))
                throw DataError(where(path, row.line) + ": non-finite logit '" + row.fields[c + 1] + "'");
        }
        if (out.contains(row.fields[0]))
            throw DataError(where(path, row.line) + ": duplicate sample id '" + row.fields[0] + "'");
        out.add(row.fields[0], values);
    }
    return out;
}

void write_logits(const LogitTable& table, const std::filesystem::path& path) {
    std::string out = "sample_id,z0,z1,z2,z3,z4,z5,z6\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
        out += table.ids()[i];
        for (double v : table.row(i)) {
            out += ',';
            out += csv::format_double(v);
        }
        out += '\n';
    }
    csv::write_file(path, out);
}

AlignedLogits align(const std::vector<LogitTable>& tables, const std::vector<std::string>& ids) {
    const std::size_t n = ids.size();
    const std::size_t m = tables.size();
    AlignedLogits out{Matrix(n, kNumClasses * m), {}};
    out.views.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        Matrix view(n, kNumClasses);
        for (std::size_t i = 0; i < n; ++i) {
            if (!tables[k].contains(ids[i]))
                throw ValidationError("sample id '" + ids[i] + "' missing from model " +
                                      std::to_string(k + 1) + " (" + tables[k].model_id() + ")");
            const auto src = tables[k].row(ids[i]);
            std::copy(src.begin(), src.end(), view.row(i).begin());
            std::copy(src.begin(), src.end(), out.features.row(i).begin() + static_cast<std::ptrdiff_t>(k * kNumClasses));
        }
        out.views.push_back(std::move(view));
    }
    return out;
}

}  // namespace skinstack
