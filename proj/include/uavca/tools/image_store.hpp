// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavca/core.hpp"
#include "uavca/errors.hpp"
#include "uavca/image_io.hpp"

namespace uavca::tools {

struct ImageEntry {
    std::string id;
    std::filesystem::path path;
};

/// Indexed images loaded lazily from disk and cached.
///
/// Manifest: {"images": [{"id": ..., "path": ...}]}; relative paths resolve
/// against the manifest's directory.
class ImageStore {
public:
    explicit ImageStore(std::vector<ImageEntry> entries) : entries_(std::move(entries)) {
        std::map<std::string, int> seen;
        for (const auto& e : entries_) {
            if (e.id.empty()) throw InvariantViolation("image ids must be non-empty");
            if (++seen[e.id] > 1) throw InvariantViolation("duplicate image id in store: " + e.id);
        }
    }

    static ImageStore from_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
        if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array()) {
            throw Error("image manifest must be an object with an \"images\" list");
        }
        std::vector<ImageEntry> entries;
        for (const auto& item : doc["images"]) {
            std::filesystem::path p = item.at("path").get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            entries.push_back({item.at("id").get<std::string>(), p});
        }
        return ImageStore(std::move(entries));
    }

    static ImageStore load_manifest(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open image manifest: " + path.string());
        try {
            return from_manifest(nlohmann::json::parse(in), path.parent_path());
        } catch (const nlohmann::json::exception& e) {
            throw Error("invalid image manifest " + path.string() + ": " + e.what());
        }
    }

    /// A store over images already in memory.
    static ImageStore from_images(const std::vector<SceneImage>& images) {
        std::vector<ImageEntry> entries;
        for (const auto& im : images) entries.push_back({im.id(), im.source_path().value_or("")});
        ImageStore store(std::move(entries));
        for (std::size_t i = 0; i < images.size(); ++i) store.cache_.emplace(i, images[i]);
        return store;
    }

    ImageStore(const ImageStore& other) : entries_(other.entries_) {
        std::lock_guard lock(other.mutex_);
        cache_ = other.cache_;
    }

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<ImageEntry>& entries() const noexcept { return entries_; }

    SceneImage read(long long index) const {
        if (index < 0 || static_cast<std::size_t>(index) >= entries_.size()) {
            throw IndexOutOfRange("image index " + std::to_string(index) + " outside [0, " +
                                  std::to_string(entries_.size()) + ")");
        }
        const auto i = static_cast<std::size_t>(index);
        std::lock_guard lock(mutex_);
        if (const auto it = cache_.find(i); it != cache_.end()) return it->second;
        auto image = load_image(entries_[i].path, entries_[i].id);
        cache_.emplace(i, image);
        return image;
    }

    std::optional<long long> index_of(const std::string& id) const {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].id == id) return static_cast<long long>(i);
        }
        return std::nullopt;
    }

private:
    std::vector<ImageEntry> entries_;
    mutable std::mutex mutex_;
    mutable std::map<std::size_t, SceneImage> cache_;
};

/// Airspace-analysis image by index.
inline SceneImage read_image(long long index, const ImageStore& store) { return store.read(index); }

/// Same contract as read_image, against the simulation store.
inline SceneImage read_image_for_simulation(long long index, const ImageStore& store) { return store.read(index); }

}  // namespace uavca::tools
