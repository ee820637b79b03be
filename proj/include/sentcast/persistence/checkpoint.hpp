#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/core/time.hpp>
#include <sentcast/persistence/event_log.hpp>
#include <sentcast/persistence/file.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace sentcast::persistence {

inline constexpr std::string_view kCheckpointFormat = "sentcast-checkpoint";
inline constexpr std::size_t kCheckpointsKept = 3;

/// Snapshot contents: everything needed to resume after record `up_to_sequence`.
struct Checkpoint {
    std::uint64_t up_to_sequence = 0;
    Timestamp created_at{}; ///< event time of the last window covered, never wall time
    nlohmann::json payload;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::uint64_t seq) {
    return dir / ("ckpt-" + std::to_string(seq) + ".snap");
}

inline std::string encode_checkpoint(const Checkpoint& c) {
    auto body = c.payload.dump();
    nlohmann::json j{{"format", kCheckpointFormat},
                     {"up_to_sequence", c.up_to_sequence},
                     {"created_at", format_timestamp(c.created_at)},
                     {"payload", c.payload},
                     {"crc32", crc32(body)}};
    return j.dump();
}

/// Parses and CRC-checks a snapshot; throws CorruptionError on any defect.
inline Checkpoint decode_checkpoint(std::string_view bytes) {
    try {
        auto j = nlohmann::json::parse(bytes);
        if (j.at("format").get<std::string>() != kCheckpointFormat) {
            throw CorruptionError("not a checkpoint file");
        }
        Checkpoint c;
        c.up_to_sequence = j.at("up_to_sequence").get<std::uint64_t>();
        c.created_at = parse_timestamp(j.at("created_at").get<std::string>());
        c.payload = j.at("payload");
        if (crc32(c.payload.dump()) != j.at("crc32").get<std::uint32_t>()) {
            throw CorruptionError("checkpoint CRC mismatch", c.up_to_sequence);
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("unreadable checkpoint: ") + e.what());
    } catch (const DataError& e) {
        throw CorruptionError(std::string("unreadable checkpoint: ") + e.what());
    }
}

inline void write_checkpoint(const std::filesystem::path& dir, const Checkpoint& c) {
    write_file_atomically(checkpoint_path(dir, c.up_to_sequence), encode_checkpoint(c));
}

inline Checkpoint read_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw IoError("cannot read checkpoint " + file.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    auto c = decode_checkpoint(bytes);
    auto expected = checkpoint_path(file.parent_path(), c.up_to_sequence).filename();
    if (file.filename() != expected) {
        throw CorruptionError("checkpoint " + file.string() + " names a different sequence", c.up_to_sequence);
    }
    return c;
}

/// Sequence numbers of `ckpt-<n>.snap` files in `dir`, newest first. Temporary files are ignored.
inline std::vector<std::uint64_t> list_checkpoints(const std::filesystem::path& dir) {
    std::vector<std::uint64_t> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        auto name = entry.path().filename().string();
        constexpr std::string_view prefix = "ckpt-";
        constexpr std::string_view suffix = ".snap";
        if (name.size() <= prefix.size() + suffix.size() || !name.starts_with(prefix) || !name.ends_with(suffix)) {
            continue;
        }
        std::string_view digits(name.data() + prefix.size(), name.size() - prefix.size() - suffix.size());
        std::uint64_t seq = 0;
        auto [ptr, err] = std::from_chars(digits.data(), digits.data() + digits.size(), seq);
        if (err == std::errc{} && ptr == digits.data() + digits.size()) {
            out.push_back(seq);
        }
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

/// Deletes all but the newest `keep` snapshots and any leftover temporary files.
inline void prune_checkpoints(const std::filesystem::path& dir, std::size_t keep = kCheckpointsKept) {
    auto seqs = list_checkpoints(dir);
    std::error_code ec;
    for (std::size_t i = keep; i < seqs.size(); ++i) {
        std::filesystem::remove(checkpoint_path(dir, seqs[i]), ec);
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        auto name = entry.path().filename().string();
        if (name.starts_with("ckpt-") && name.ends_with(".snap.tmp")) {
            std::filesystem::remove(entry.path(), ec);
        }
    }
}

} // namespace sentcast::persistence
