#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ccotdr/errors.hpp"
#include "ccotdr/receiver.hpp"

namespace ccotdr {

// Capture file, little-endian:
//   64-byte header: magic "CCOT" | version u32 | sample_rate f64 |
//                   n_frames u32 | frame_len u32 | n_channels u32 (= 4) |
//                   zero padding to 64 bytes
//   frames in order, each frame = 4 channels x frame_len f32, channel-major.

struct CaptureHeader {
    uint32_t version = 1;
    double sample_rate = 0.0;
    uint32_t n_frames = 0;
    uint32_t frame_len = 0;
    uint32_t n_channels = 4;

    static constexpr std::size_t kSize = 64;
    static constexpr char kMagic[4] = {'C', 'C', 'O', 'T'};

    void encode(char* buf) const {
        std::memset(buf, 0, kSize);
        std::memcpy(buf, kMagic, 4);
        std::memcpy(buf + 4, &version, 4);
        std::memcpy(buf + 8, &sample_rate, 8);
        std::memcpy(buf + 16, &n_frames, 4);
        std::memcpy(buf + 20, &frame_len, 4);
        std::memcpy(buf + 24, &n_channels, 4);
    }

    static CaptureHeader decode(const char* buf) {
        if (std::memcmp(buf, kMagic, 4) != 0)
            throw config_error("capture file: bad magic (not a CCOT capture)");
        CaptureHeader h;
        std::memcpy(&h.version, buf + 4, 4);
        std::memcpy(&h.sample_rate, buf + 8, 8);
        std::memcpy(&h.n_frames, buf + 16, 4);
        std::memcpy(&h.frame_len, buf + 20, 4);
        std::memcpy(&h.n_channels, buf + 24, 4);
        if (h.version != 1) throw config_error("capture file: unsupported version");
        if (h.n_channels != 4) throw config_error("capture file: expected 4 channels");
        return h;
    }
};

class CaptureWriter {
public:
    CaptureWriter(const std::string& path, double sample_rate, uint32_t n_frames,
                  uint32_t frame_len)
        : out_(path, std::ios::binary) {
        if (!out_) throw config_error("cannot open capture file for writing: " + path);
        CaptureHeader h;
        h.sample_rate = sample_rate;
        h.n_frames = n_frames;
        h.frame_len = frame_len;
        char buf[CaptureHeader::kSize];
        h.encode(buf);
        out_.write(buf, CaptureHeader::kSize);
        frame_len_ = frame_len;
    }

    void write_frame(const FrameCapture& cap) {
        for (const auto& c : cap.ch) {
            if (c.size() != frame_len_)
                throw config_error("capture write: frame length mismatch");
            out_.write(reinterpret_cast<const char*>(c.data()),
                       static_cast<std::streamsize>(c.size() * sizeof(float)));
        }
        if (!out_) throw config_error("capture write failed");
    }

private:
    std::ofstream out_;
    std::size_t frame_len_ = 0;
};

class CaptureReader {
public:
    explicit CaptureReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw config_error("cannot open capture file: " + path);
        char buf[CaptureHeader::kSize];
        in_.read(buf, CaptureHeader::kSize);
        if (in_.gcount() != CaptureHeader::kSize)
            throw config_error("capture file: truncated header");
        header_ = CaptureHeader::decode(buf);
    }

    const CaptureHeader& header() const { return header_; }

    FrameCapture read_frame(uint32_t index, double frame_duration) {
        if (index >= header_.n_frames)
            throw config_error("capture read: frame index out of range");
        const std::size_t frame_bytes = 4ull * header_.frame_len * sizeof(float);
        in_.seekg(static_cast<std::streamoff>(CaptureHeader::kSize + frame_bytes * index));
        FrameCapture cap;
        cap.sample_rate = header_.sample_rate;
        cap.frame_index = index;
        cap.timestamp = index * frame_duration;
        for (auto& c : cap.ch) {
            c.resize(header_.frame_len);
            in_.read(reinterpret_cast<char*>(c.data()),
                     static_cast<std::streamsize>(c.size() * sizeof(float)));
        }
        if (!in_) throw config_error("capture file: truncated frame data");
        return cap;
    }

private:
    std::ifstream in_;
    CaptureHeader header_;
};

} // namespace ccotdr
