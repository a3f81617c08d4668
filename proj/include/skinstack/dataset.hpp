#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skinstack/matrix.hpp"

namespace skinstack {

inline constexpr std::size_t kNumClasses = 7;

/// The seven lesion categories, in census order.
enum class Lesion : std::uint8_t { mel = 0, nv, bcc, akiec, bkl, df, vasc };

inline constexpr std::array<std::string_view, kNumClasses> kLesionCodes = {
    "mel", "nv", "bcc", "akiec", "bkl", "df", "vasc"};

std::string_view lesion_code(Lesion label);
std::optional<Lesion> parse_lesion(std::string_view code);
inline int class_index(Lesion label) { return static_cast<int>(label); }

struct MetadataRecord {
    std::string sample_id;
    std::string group_id;
    Lesion label = Lesion::mel;
};

/// Column names used to pick fields out of a metadata CSV. The canonical
/// file has `sample_id,group_id,dx`; the raw HAM10000 sheet can be read with
/// {"image_id", "lesion_id", "dx"}.
struct MetadataColumns {
    std::string sample_id = "sample_id";
    std::string group_id = "group_id";
    std::string label = "dx";
};

std::vector<MetadataRecord> load_metadata(const std::filesystem::path& path,
                                          const MetadataColumns& columns = {});
void write_metadata(const std::vector<MetadataRecord>& records, const std::filesystem::path& path);

/// Keeps the first record of every group, preserving input order.
std::vector<MetadataRecord> dedup_by_group(const std::vector<MetadataRecord>& records);

std::array<std::size_t, kNumClasses> class_counts(const std::vector<MetadataRecord>& records);

enum class Split : std::uint8_t { train, val, test };

std::string_view split_name(Split split);
std::optional<Split> parse_split(std::string_view name);

struct SplitAssignment {
    /// Same order as the records passed to stratified_split.
    std::vector<std::string> sample_ids;
    std::vector<Split> splits;
    std::vector<std::string> warnings;

    std::vector<std::string> ids_in(Split split) const;
    std::array<std::size_t, 3> sizes() const;
};

/// Per class, shuffles the records with a seeded generator and cuts them into
/// train/val/test blocks of floor(ratio * n) with the leftovers handed out by
/// largest fractional part (ties to the earlier split). Every class stays
/// within one sample of its exact share.
SplitAssignment stratified_split(const std::vector<MetadataRecord>& records,
                                 const std::array<double, 3>& ratios, std::uint64_t seed);

void write_split(const SplitAssignment& assignment, const std::filesystem::path& path);
/// Reads a `sample_id,split` file back as an id → split map.
std::unordered_map<std::string, Split> load_split(const std::filesystem::path& path);

/// Raw per-model logits keyed by sample id. Row order is the file order.
class LogitTable {
public:
    LogitTable() = default;
    explicit LogitTable(std::string model_id) : model_id_(std::move(model_id)) {}

    const std::string& model_id() const { return model_id_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }

    /// Appends a row. Throws DataError on a duplicate id, a row that is not
    /// seven wide, or a non-finite value.
    void add(std::string sample_id, std::span<const double> logits);

    bool contains(const std::string& sample_id) const { return index_.contains(sample_id); }
    std::span<const double> row(const std::string& sample_id) const;
    std::span<const double> row(std::size_t i) const;

private:
    std::string model_id_;
    std::vector<std::string> ids_;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// The model id defaults to the file stem.
LogitTable load_logits(const std::filesystem::path& path, std::string model_id = {});
void write_logits(const LogitTable& table, const std::filesystem::path& path);

struct AlignedLogits {
    /// N x (7 * M): model blocks side by side in the order given.
    Matrix features;
    /// One N x 7 matrix per model.
    std::vector<Matrix> views;
};

/// Looks up every id in every table. A missing id raises ValidationError
/// naming the model and the id.
AlignedLogits align(const std::vector<LogitTable>& tables, const std::vector<std::string>& ids);

}  // namespace skinstack
