#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/persistence/file.hpp>

#include <json.hpp>
#include <zlib.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sentcast::persistence {

inline std::uint32_t crc32(std::string_view bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32_z(crc, reinterpret_cast<const Bytef*>(bytes.data()), bytes.size());
    return static_cast<std::uint32_t>(crc);
}

enum class RecordKind { closed_window, prediction, actual, checkpoint_marker };

inline std::string_view to_string(RecordKind k) {
    switch (k) {
    case RecordKind::closed_window: return "closed_window";
    case RecordKind::prediction: return "prediction";
    case RecordKind::actual: return "actual";
    case RecordKind::checkpoint_marker: return "checkpoint_marker";
    }
    return "?";
}

inline std::optional<RecordKind> record_kind_from_string(std::string_view s) {
    for (auto k : {RecordKind::closed_window, RecordKind::prediction, RecordKind::actual,
                   RecordKind::checkpoint_marker}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

/// One log entry. `commit` marks the last record of an atomic group; recovery discards
/// any records after the final committed one.
struct LogRecord {
    std::uint64_t seq = 0;
    RecordKind kind = RecordKind::closed_window;
    nlohmann::json data;
    bool commit = false;

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

/// Canonical payload bytes: JSON with sorted keys and round-trip doubles.
inline std::string encode_payload(const LogRecord& r) {
    nlohmann::json j{{"seq", r.seq}, {"kind", to_string(r.kind)}, {"data", r.data}, {"commit", r.commit}};
    return j.dump();
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])) << (8 * i);
    }
    return v;
}

} // namespace detail

/// Framed record: little-endian u32 payload length, payload, little-endian u32 CRC-32 of payload.
inline std::string frame_record(const LogRecord& r) {
    auto payload = encode_payload(r);
    std::string out;
    out.reserve(payload.size() + 8);
    detail::put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out += payload;
    detail::put_u32(out, crc32(payload));
    return out;
}

struct LogScan {
    std::vector<LogRecord> records;
    std::vector<std::uint64_t> end_offsets; ///< byte offset just past each record
    std::uint64_t file_size = 0;
    bool torn_tail = false;

    [[nodiscard]] std::uint64_t valid_bytes() const { return end_offsets.empty() ? 0 : end_offsets.back(); }

    /// Number of records up to and including the last committed one.
    [[nodiscard]] std::size_t committed_count() const {
        for (std::size_t i = records.size(); i > 0; --i) {
            if (records[i - 1].commit) {
                return i;
            }
        }
        return 0;
    }
};

/// Reads every intact record. A short or CRC-failing final record is a torn tail and is
/// reported, not thrown. Damage followed by further bytes is corruption.
inline LogScan scan_log(const std::filesystem::path& path) {
    LogScan scan;
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        return scan;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read log " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    if (in.bad()) {
        throw IoError("read failure on log " + path.string());
    }
    scan.file_size = bytes.size();
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::uint64_t expected_seq = scan.records.size();
        if (bytes.size() - pos < 4) {
            scan.torn_tail = true;
            break;
        }
        std::size_t len = detail::get_u32(bytes, pos);
        if (bytes.size() - pos - 4 < len + 4) {
            scan.torn_tail = true;
            break;
        }
        std::string_view payload(bytes.data() + pos + 4, len);
        std::uint32_t stored = detail::get_u32(bytes, pos + 4 + len);
        std::size_t end = pos + 8 + len;
        if (crc32(payload) != stored) {
            if (end == bytes.size()) {
                scan.torn_tail = true;
                break;
            }
            throw CorruptionError("CRC mismatch in log record " + std::to_string(expected_seq), expected_seq);
        }
        LogRecord r;
        try {
            auto j = nlohmann::json::parse(payload);
            r.seq = j.at("seq").get<std::uint64_t>();
            auto kind = record_kind_from_string(j.at("kind").get<std::string>());
            if (!kind) {
                throw CorruptionError("unknown record kind in log record " + std::to_string(expected_seq),
                                      expected_seq);
            }
            r.kind = *kind;
            r.data = j.at("data");
            r.commit = j.at("commit").get<bool>();
        } catch (const nlohmann::json::exception& e) {
            throw CorruptionError("unreadable log record " + std::to_string(expected_seq) + ": " + e.what(),
                                  expected_seq);
        }
        if (r.seq != expected_seq) {
            throw CorruptionError("log sequence gap: expected " + std::to_string(expected_seq) + ", found " +
                                      std::to_string(r.seq),
                                  expected_seq);
        }
        scan.records.push_back(std::move(r));
        scan.end_offsets.push_back(end);
        pos = end;
    }
    return scan;
}

enum class Durability { per_window, relaxed };

/// Single-writer append-only log. Records are buffered until `commit_group`, which writes
/// the group in one call and, under per-window durability, fsyncs it. After any IO failure
/// the log refuses further writes.
class EventLog {
public:
    static constexpr const char* kFileName = "events.log";

    EventLog(std::unique_ptr<WritableFile> file, std::uint64_t next_seq, Durability durability)
        : file_(std::move(file)), next_seq_(next_seq), durability_(durability) {}

    /// Opens `dir/events.log`, dropping a torn tail and any uncommitted trailing group.
    static EventLog open(const std::filesystem::path& dir, Durability durability, LogScan* scan_out = nullptr) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            throw IoError("cannot create data directory " + dir.string() + ": " + ec.message());
        }
        auto path = dir / kFileName;
        auto scan = scan_log(path);
        auto keep = scan.committed_count();
        std::uint64_t keep_bytes = keep == 0 ? 0 : scan.end_offsets[keep - 1];
        auto file = std::make_unique<PosixFile>(path);
        if (file->size() != keep_bytes) {
            file->truncate(keep_bytes);
            file->sync();
        }
        scan.records.resize(keep);
        scan.end_offsets.resize(keep);
        EventLog log(std::move(file), keep, durability);
        if (scan_out != nullptr) {
            *scan_out = std::move(scan);
        }
        return log;
    }

    /// Buffers a record and returns its sequence number.
    std::uint64_t append(RecordKind kind, nlohmann::json data, bool commit = false) {
        ensure_healthy();
        LogRecord r{next_seq_, kind, std::move(data), commit};
        pending_ += frame_record(r);
        return next_seq_++;
    }

    /// Writes buffered records and makes them durable according to the policy.
    void commit_group() { flush(durability_ == Durability::per_window); }

    /// Writes buffered records and fsyncs regardless of policy.
    void sync() { flush(true); }

    [[nodiscard]] std::uint64_t next_sequence() const noexcept { return next_seq_; }
    [[nodiscard]] bool failed() const noexcept { return failed_; }
    [[nodiscard]] bool has_pending() const noexcept { return !pending_.empty(); }
    [[nodiscard]] Durability durability() const noexcept { return durability_; }

private:
    void ensure_healthy() const {
        if (failed_) {
            throw IoError("event log is unusable after an earlier write failure");
        }
    }

    void flush(bool fsync) {
        ensure_healthy();
        try {
            if (!pending_.empty()) {
                file_->append(pending_);
                pending_.clear();
            }
            if (fsync) {
                file_->sync();
            }
        } catch (...) {
            failed_ = true;
            throw;
        }
    }

    std::unique_ptr<WritableFile> file_;
    std::uint64_t next_seq_ = 0;
    Durability durability_;
    std::string pending_;
    bool failed_ = false;
};

} // namespace sentcast::persistence
