#pragma once

#include <sentcast/core/error.hpp>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

namespace sentcast::persistence {

/// Append-only byte sink. Every failure is reported as IoError.
class WritableFile {
public:
    virtual ~WritableFile() = default;
    virtual void append(std::string_view bytes) = 0;
    virtual void sync() = 0;
    virtual void truncate(std::uint64_t size) = 0;
    [[nodiscard]] virtual std::uint64_t size() const = 0;
};

namespace detail {

[[noreturn]] inline void throw_errno(const std::string& what, const std::filesystem::path& p) {
    throw IoError(what + " " + p.string() + ": " + std::strerror(errno));
}

} // namespace detail

/// POSIX file descriptor opened for appending; created if missing.
class PosixFile final : public WritableFile {
public:
    explicit PosixFile(std::filesystem::path path) : path_(std::move(path)) {
        fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) {
            detail::throw_errno("cannot open", path_);
        }
        auto end = ::lseek(fd_, 0, SEEK_END);
        if (end < 0) {
            ::close(fd_);
            detail::throw_errno("cannot seek", path_);
        }
        size_ = static_cast<std::uint64_t>(end);
    }

    ~PosixFile() override {
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }

    PosixFile(const PosixFile&) = delete;
    PosixFile& operator=(const PosixFile&) = delete;

    void append(std::string_view bytes) override {
        while (!bytes.empty()) {
            auto n = ::write(fd_, bytes.data(), bytes.size());
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                detail::throw_errno("write failed on", path_);
            }
            bytes.remove_prefix(static_cast<std::size_t>(n));
            size_ += static_cast<std::uint64_t>(n);
        }
    }

    void sync() override {
        if (::fsync(fd_) != 0) {
            detail::throw_errno("fsync failed on", path_);
        }
    }

    void truncate(std::uint64_t size) override {
        if (::ftruncate(fd_, static_cast<off_t>(size)) != 0 || ::lseek(fd_, 0, SEEK_END) < 0) {
            detail::throw_errno("truncate failed on", path_);
        }
        size_ = size;
    }

    [[nodiscard]] std::uint64_t size() const override { return size_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    std::uint64_t size_ = 0;
};

/// Makes a rename or create inside `dir` durable.
inline void sync_directory(const std::filesystem::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd < 0) {
        detail::throw_errno("cannot open directory", dir);
    }
    int rc = ::fsync(fd);
    ::close(fd);
    if (rc != 0) {
        detail::throw_errno("fsync failed on directory", dir);
    }
}

/// Writes `content` to `path` through a temporary sibling, fsync and rename.
/// Readers see either the old file or the complete new one.
inline void write_file_atomically(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
        if (fd < 0) {
            detail::throw_errno("cannot create", tmp);
        }
        std::string_view rest = content;
        while (!rest.empty()) {
            auto n = ::write(fd, rest.data(), rest.size());
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                int saved = errno;
                ::close(fd);
                errno = saved;
                detail::throw_errno("write failed on", tmp);
            }
            rest.remove_prefix(static_cast<std::size_t>(n));
        }
        if (::fsync(fd) != 0) {
            int saved = errno;
            ::close(fd);
            errno = saved;
            detail::throw_errno("fsync failed on", tmp);
        }
        ::close(fd);
    }
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        detail::throw_errno("rename failed for", tmp);
    }
    sync_directory(path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

} // namespace sentcast::persistence
