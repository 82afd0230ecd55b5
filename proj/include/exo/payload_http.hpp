#pragma once

// Client for a live inference service.
//
//   POST <path>  multipart/form-data
//     crop      image/png         encoded crop bytes
//     features  application/json  {"bbox_w":f,"bbox_h":f,"distance_m":f}
//   200 OK      application/json  {"p":[pl,pm,ph],"model":"...","latency_ms":f}

#include <chrono>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "exo/payload.hpp"

namespace exo::payload {

inline nlohmann::ordered_json features_json(const PhysicalFeatures& f)
{
    return {{"bbox_w", f.bbox_w}, {"bbox_h", f.bbox_h}, {"distance_m", f.distance_m}};
}

struct ServiceReply {
    ProbabilityTriple p{};
    std::string model;
    double latency_ms = 0.0;
};

inline ServiceReply parse_service_reply(const std::string& body)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("inference reply is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("p") || !j["p"].is_array() || j["p"].size() != 3)
        throw BackendError("inference reply lacks a 3-element \"p\" array");
    ServiceReply r;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!j["p"][i].is_number()) throw BackendError("inference reply \"p\" must be numeric");
        r.p[i] = j["p"][i].get<double>();
    }
    if (j.contains("model") && j["model"].is_string()) r.model = j["model"].get<std::string>();
    if (j.contains("latency_ms") && j["latency_ms"].is_number()) r.latency_ms = j["latency_ms"].get<double>();
    return r;
}

class HttpBackend final : public ClassifierBackend {
public:
    HttpBackend(std::string host, int port, std::string path = "/classify",
                std::chrono::milliseconds timeout = std::chrono::milliseconds(150))
        : client_(host, port), path_(std::move(path))
    {
        client_.set_connection_timeout(timeout);
        client_.set_read_timeout(timeout);
        client_.set_write_timeout(timeout);
    }

    ProbabilityTriple classify(const CropRef& crop, const PhysicalFeatures& features) override
    {
        const httplib::MultipartFormDataItems items{
            {"crop", crop.png_bytes, "crop.png", "image/png"},
            {"features", features_json(features).dump(), "", "application/json"},
        };
        auto res = client_.Post(path_, items);
        if (!res) throw BackendError("inference service unavailable: " + httplib::to_string(res.error()));
        if (res->status != 200) throw BackendError("inference service returned HTTP " + std::to_string(res->status));
        last_ = parse_service_reply(res->body);
        return last_.p;
    }

    std::string name() const override { return "http"; }
    const ServiceReply& last_reply() const { return last_; }

private:
    httplib::Client client_;
    std::string path_;
    ServiceReply last_;
};

} // namespace exo::payload
