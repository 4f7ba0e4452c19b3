#pragma once

#include "homewatch/events.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace homewatch {

// Record layout (little-endian):
//   u32 length   number of JSON bytes that follow the header
//   u32 crc32    zlib CRC-32 of those bytes
//   u8[length]   UTF-8 JSON of one event (event_to_json)
// Records are concatenated with no file header or padding.

inline constexpr std::size_t kRecordHeaderSize = 8;

/// Fatal write failure. The log refuses further appends until recover() succeeds.
class StorageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CorruptEvent : public std::runtime_error {
public:
    CorruptEvent(std::uint64_t seq, std::uint64_t offset, const std::string& why);
    std::uint64_t seq() const { return seq_; }
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t seq_;
    std::uint64_t offset_;
};

std::string encode_record(const Event& event);

/// Decodes records from a byte buffer. Stops at the end of the buffer; throws CorruptEvent for
/// a bad checksum, a torn record, undecodable JSON or a non-increasing seq.
void decode_records(std::string_view bytes, std::uint64_t from_seq,
                    const std::function<void(const Event&)>& sink);

struct Snapshot {
    std::uint64_t seq = 0;
    nlohmann::json state;
};

/// Append-only event storage. One writer; readers see immutable prefixes.
class EventLog {
public:
    virtual ~EventLog() = default;

    /// Assigns consecutive seqs to every event (in place) and persists them before returning.
    virtual void append(std::span<Event> events) = 0;
    std::uint64_t append(Event& event);

    /// Calls `sink` for every event with seq > from_seq, in order.
    virtual void read(std::uint64_t from_seq, const std::function<void(const Event&)>& sink) const = 0;

    /// Random access by seq; nullopt if absent.
    virtual std::optional<Event> get(std::uint64_t seq) const = 0;

    virtual std::uint64_t last_seq() const = 0;
    /// Clears a previous StorageError. Returns false if storage is still unavailable.
    virtual bool recover() = 0;

    virtual void save_snapshot(const Snapshot&) {}
    virtual std::optional<Snapshot> load_snapshot() const { return std::nullopt; }
};

/// Keeps encoded records in memory. Write failures can be injected.
class MemoryEventLog final : public EventLog {
public:
    void append(std::span<Event> events) override;
    using EventLog::append;
    void read(std::uint64_t from_seq, const std::function<void(const Event&)>& sink) const override;
    std::optional<Event> get(std::uint64_t seq) const override;
    std::uint64_t last_seq() const override;
    bool recover() override;

    void save_snapshot(const Snapshot& s) override;
    std::optional<Snapshot> load_snapshot() const override;

    /// While set, appends fail; the failure latches until recover() after clearing it.
    void inject_write_failure(bool fail);

    std::string bytes() const;
    std::size_t size_bytes() const;

private:
    mutable std::mutex mutex_;
    std::string data_;
    std::vector<std::uint64_t> offsets_;  // record start by seq - 1
    std::uint64_t last_seq_ = 0;
    bool inject_failure_ = false;
    bool failed_ = false;
    std::optional<Snapshot> snapshot_;
};

/// Single append-only file; the snapshot lives next to it as `<path>.snapshot`.
class FileEventLog final : public EventLog {
public:
    struct Options {
        bool fsync = true;
    };

    /// Opens or creates the log and scans it. A corrupt log opens read-only: appends throw
    /// StorageError and read() reports the CorruptEvent.
    explicit FileEventLog(std::string path, Options options);
    explicit FileEventLog(std::string path) : FileEventLog(std::move(path), Options{}) {}
    ~FileEventLog() override;
    FileEventLog(const FileEventLog&) = delete;
    FileEventLog& operator=(const FileEventLog&) = delete;

    void append(std::span<Event> events) override;
    using EventLog::append;
    void read(std::uint64_t from_seq, const std::function<void(const Event&)>& sink) const override;
    std::optional<Event> get(std::uint64_t seq) const override;
    std::uint64_t last_seq() const override;
    bool recover() override;

    void save_snapshot(const Snapshot& s) override;
    std::optional<Snapshot> load_snapshot() const override;

    const std::string& path() const { return path_; }

private:
    void open_and_scan();

    std::string path_;
    Options options_;
    mutable std::mutex mutex_;
    int fd_ = -1;
    std::uint64_t last_seq_ = 0;
    std::uint64_t good_size_ = 0;
    std::vector<std::uint64_t> offsets_;
    bool failed_ = false;
    std::optional<std::string> corruption_;
};

enum class ExportFormat : std::uint8_t { Jsonl, Csv };

template <>
struct EnumNames<ExportFormat> {
    static constexpr std::string_view type_name = "export format";
    static constexpr std::array<std::pair<ExportFormat, std::string_view>, 2> entries{{
        {ExportFormat::Jsonl, "jsonl"},
        {ExportFormat::Csv, "csv"},
    }};
};

struct SeqRange {
    std::uint64_t first = 1;
    std::uint64_t last = UINT64_MAX;  // inclusive
};

/// Writes one pseudonymized row per event in range. CSV columns: seq,at,patient_id,kind,payload
/// (payload is the pseudonymized JSON object). Returns the row count.
std::size_t export_events(const EventLog& log, SeqRange range, ExportFormat format,
                          std::ostream& out);

}  // namespace homewatch
