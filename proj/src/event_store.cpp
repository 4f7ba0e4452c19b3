#include "homewatch/event_store.hpp"

#include <fmt/format.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <ostream>
#include <sstream>
#include <sys/stat.h>
#include <unistd.h>
#include <vector>

namespace homewatch {

using nlohmann::json;

CorruptEvent::CorruptEvent(std::uint64_t seq, std::uint64_t offset, const std::string& why)
    : std::runtime_error(fmt::format("corrupt event at seq {} (byte offset {}): {}", seq, offset,
                                     why)),
      seq_(seq),
      offset_(offset) {}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
    return v;
}

std::uint32_t crc_of(std::string_view bytes) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

/// Incremental decoder shared by the memory and file logs.
class RecordDecoder {
public:
    explicit RecordDecoder(std::uint64_t base_offset = 0) : offset_(base_offset) {}

    /// Decodes one record whose header and body are given. Returns the event.
    Event decode(const char* header, std::string_view body) {
        const std::uint64_t expected = last_seq_ + 1;
        if (crc_of(body) != get_u32(header + 4)) {
            throw CorruptEvent(expected, offset_, "checksum mismatch");
        }
        Event e;
        try {
            e = event_from_json(json::parse(body));
        } catch (const std::exception& ex) {
            throw CorruptEvent(expected, offset_, ex.what());
        }
        if (e.seq != expected) {
            throw CorruptEvent(expected, offset_, fmt::format("found seq {}", e.seq));
        }
        last_seq_ = e.seq;
        offset_ += kRecordHeaderSize + body.size();
        return e;
    }

    [[noreturn]] void torn(const std::string& why) const {
        throw CorruptEvent(last_seq_ + 1, offset_, why);
    }

    std::uint64_t last_seq() const { return last_seq_; }
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t last_seq_ = 0;
    std::uint64_t offset_;
};

constexpr std::uint32_t kMaxRecordSize = 64u << 20;

/// Streams records from a file, reading at most `limit` bytes. Returns the end offset of the
/// last complete record.
std::uint64_t scan_file(const std::string& path, std::uint64_t limit, std::uint64_t from_seq,
                        const std::function<void(const Event&)>& sink,
                        std::vector<std::uint64_t>* offsets = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError(fmt::format("cannot read event log '{}'", path));
    std::vector<char> buffer(1 << 20);
    in.rdbuf()->pubsetbuf(buffer.data(), static_cast<std::streamsize>(buffer.size()));

    RecordDecoder decoder;
    std::array<char, kRecordHeaderSize> header{};
    std::string body;
    while (decoder.offset() < limit) {
        in.read(header.data(), header.size());
        const auto got = in.gcount();
        if (got == 0) break;
        if (got < static_cast<std::streamsize>(header.size())) {
            decoder.torn("truncated record header");
        }
        const std::uint32_t len = get_u32(header.data());
        if (len > kMaxRecordSize) decoder.torn("record length out of range");
        body.resize(len);
        in.read(body.data(), len);
        if (in.gcount() < static_cast<std::streamsize>(len)) decoder.torn("truncated record body");
        const std::uint64_t start = decoder.offset();
        Event e = decoder.decode(header.data(), body);
        if (offsets != nullptr) offsets->push_back(start);
        if (e.seq > from_seq) sink(e);
    }
    return decoder.offset();
}

}  // namespace

std::string encode_record(const Event& event) {
    const std::string body = event_to_json(event).dump();
    std::string out;
    out.reserve(kRecordHeaderSize + body.size());
    put_u32(out, static_cast<std::uint32_t>(body.size()));
    put_u32(out, crc_of(body));
    out += body;
    return out;
}

void decode_records(std::string_view bytes, std::uint64_t from_seq,
                    const std::function<void(const Event&)>& sink) {
    RecordDecoder decoder;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < kRecordHeaderSize) decoder.torn("truncated record header");
        const char* header = bytes.data() + pos;
        const std::uint32_t len = get_u32(header);
        if (len > kMaxRecordSize || bytes.size() - pos - kRecordHeaderSize < len) {
            decoder.torn("truncated record body");
        }
        Event e = decoder.decode(header, bytes.substr(pos + kRecordHeaderSize, len));
        pos += kRecordHeaderSize + len;
        if (e.seq > from_seq) sink(e);
    }
}

std::uint64_t EventLog::append(Event& event) {
    append(std::span<Event>(&event, 1));
    return event.seq;
}

// ---------------------------------------------------------------------------

void MemoryEventLog::append(std::span<Event> events) {
    std::lock_guard lock(mutex_);
    if (inject_failure_) failed_ = true;
    if (failed_) throw StorageError("event storage unavailable");
    std::uint64_t seq = last_seq_;
    std::string encoded;
    std::vector<std::uint64_t> starts;
    for (auto& e : events) {
        e.seq = ++seq;
        starts.push_back(data_.size() + encoded.size());
        encoded += encode_record(e);
    }
    data_ += encoded;
    offsets_.insert(offsets_.end(), starts.begin(), starts.end());
    last_seq_ = seq;
}

std::optional<Event> MemoryEventLog::get(std::uint64_t seq) const {
    std::lock_guard lock(mutex_);
    if (seq == 0 || seq > offsets_.size()) return std::nullopt;
    const std::uint64_t start = offsets_[seq - 1];
    const std::uint32_t len = get_u32(data_.data() + start);
    return event_from_json(json::parse(
        std::string_view(data_).substr(start + kRecordHeaderSize, len)));
}

void MemoryEventLog::read(std::uint64_t from_seq,
                          const std::function<void(const Event&)>& sink) const {
    std::string copy;
    {
        std::lock_guard lock(mutex_);
        copy = data_;
    }
    decode_records(copy, from_seq, sink);
}

std::uint64_t MemoryEventLog::last_seq() const {
    std::lock_guard lock(mutex_);
    return last_seq_;
}

bool MemoryEventLog::recover() {
    std::lock_guard lock(mutex_);
    if (inject_failure_) return false;
    failed_ = false;
    return true;
}

void MemoryEventLog::save_snapshot(const Snapshot& s) {
    std::lock_guard lock(mutex_);
    snapshot_ = s;
}

std::optional<Snapshot> MemoryEventLog::load_snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
}

void MemoryEventLog::inject_write_failure(bool fail) {
    std::lock_guard lock(mutex_);
    inject_failure_ = fail;
}

std::string MemoryEventLog::bytes() const {
    std::lock_guard lock(mutex_);
    return data_;
}

std::size_t MemoryEventLog::size_bytes() const {
    std::lock_guard lock(mutex_);
    return data_.size();
}

// ---------------------------------------------------------------------------

FileEventLog::FileEventLog(std::string path, Options options)
    : path_(std::move(path)), options_(options) {
    open_and_scan();
}

FileEventLog::~FileEventLog() {
    if (fd_ >= 0) ::close(fd_);
}

void FileEventLog::open_and_scan() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        throw StorageError(fmt::format("cannot open event log '{}': {}", path_,
                                       std::strerror(errno)));
    }
    last_seq_ = 0;
    good_size_ = 0;
    offsets_.clear();
    corruption_.reset();
    try {
        good_size_ = scan_file(
            path_, UINT64_MAX, 0, [&](const Event& e) { last_seq_ = e.seq; }, &offsets_);
    } catch (const CorruptEvent& e) {
        corruption_ = e.what();
        last_seq_ = e.seq() - 1;
        good_size_ = e.offset();
        offsets_.resize(last_seq_);
    }
}

void FileEventLog::append(std::span<Event> events) {
    std::lock_guard lock(mutex_);
    if (corruption_) throw StorageError("event log is corrupt: " + *corruption_);
    if (failed_) throw StorageError("event storage unavailable");
    std::uint64_t seq = last_seq_;
    std::string encoded;
    std::vector<std::uint64_t> starts;
    for (auto& e : events) {
        e.seq = ++seq;
        starts.push_back(good_size_ + encoded.size());
        encoded += encode_record(e);
    }
    std::size_t written = 0;
    while (written < encoded.size()) {
        const ssize_t n = ::write(fd_, encoded.data() + written, encoded.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            failed_ = true;
            throw StorageError(fmt::format("event log write failed: {}", std::strerror(errno)));
        }
        written += static_cast<std::size_t>(n);
    }
    if (options_.fsync && ::fsync(fd_) != 0) {
        failed_ = true;
        throw StorageError(fmt::format("event log fsync failed: {}", std::strerror(errno)));
    }
    last_seq_ = seq;
    good_size_ += encoded.size();
    offsets_.insert(offsets_.end(), starts.begin(), starts.end());
}

std::optional<Event> FileEventLog::get(std::uint64_t seq) const {
    std::uint64_t start = 0;
    {
        std::lock_guard lock(mutex_);
        if (seq == 0 || seq > offsets_.size()) return std::nullopt;
        start = offsets_[seq - 1];
    }
    std::array<char, kRecordHeaderSize> header{};
    if (::pread(fd_, header.data(), header.size(), static_cast<off_t>(start)) !=
        static_cast<ssize_t>(header.size())) {
        throw StorageError("event log read failed");
    }
    std::string body(get_u32(header.data()), '\0');
    if (::pread(fd_, body.data(), body.size(), static_cast<off_t>(start + kRecordHeaderSize)) !=
        static_cast<ssize_t>(body.size())) {
        throw StorageError("event log read failed");
    }
    return event_from_json(json::parse(body));
}

void FileEventLog::read(std::uint64_t from_seq,
                        const std::function<void(const Event&)>& sink) const {
    std::uint64_t limit = 0;
    {
        std::lock_guard lock(mutex_);
        if (corruption_) {
            limit = UINT64_MAX;  // read up to the damage so the caller sees CorruptEvent
        } else {
            limit = good_size_;
        }
    }
    scan_file(path_, limit, from_seq, sink);
}

std::uint64_t FileEventLog::last_seq() const {
    std::lock_guard lock(mutex_);
    return last_seq_;
}

bool FileEventLog::recover() {
    std::lock_guard lock(mutex_);
    if (corruption_) return false;
    if (!failed_) return true;
    // Drop any partially written tail, then reopen.
    if (::truncate(path_.c_str(), static_cast<off_t>(good_size_)) != 0) return false;
    try {
        open_and_scan();
    } catch (const StorageError&) {
        return false;
    }
    failed_ = corruption_.has_value();
    return !failed_;
}

void FileEventLog::save_snapshot(const Snapshot& s) {
    const std::string tmp = path_ + ".snapshot.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << "{\"seq\":" << s.seq << ",\"state\":" << s.state << '}';
        if (!out) throw StorageError("snapshot write failed");
    }
    if (std::rename(tmp.c_str(), (path_ + ".snapshot").c_str()) != 0) {
        throw StorageError("snapshot rename failed");
    }
}

std::optional<Snapshot> FileEventLog::load_snapshot() const {
    std::ifstream in(path_ + ".snapshot", std::ios::binary);
    if (!in) return std::nullopt;
    try {
        const json j = json::parse(in);
        Snapshot s{j.at("seq").get<std::uint64_t>(), j.at("state")};
        if (s.seq > last_seq()) return std::nullopt;
        return s;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------

namespace {

std::string csv_field(std::string_view s) {
    const bool quote = s.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!quote) return std::string(s);
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::size_t export_events(const EventLog& log, SeqRange range, ExportFormat format,
                          std::ostream& out) {
    std::size_t rows = 0;
    if (format == ExportFormat::Csv) out << "seq,at,patient_id,kind,payload\n";
    log.read(range.first > 0 ? range.first - 1 : 0, [&](const Event& e) {
        if (e.seq > range.last) return;
        const json j = pseudonymized_event_json(e);
        if (format == ExportFormat::Jsonl) {
            out << j.dump() << '\n';
        } else {
            out << e.seq << ',' << csv_field(j["at"].get<std::string>()) << ','
                << csv_field(e.patient_id) << ',' << csv_field(e.kind()) << ','
                << csv_field(j["payload"].dump()) << '\n';
        }
        ++rows;
    });
    return rows;
}

}  // namespace homewatch
