#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "boost.hpp"
#include "table.hpp"

namespace boostclean {

inline constexpr std::string_view kModelMagic = "BCMODEL\x01";
inline constexpr std::uint32_t kModelVersion = 1;

/// A self-contained model: the ensemble plus the schema it expects.
struct DeployedModel {
    Schema schema;
    Ensemble ensemble;
};

inline nlohmann::json ensemble_to_json(const Ensemble& e) {
    // Members that share a classifier (prediction repairs wrap the base) store it once.
    std::map<const Classifier*, std::size_t> slot;
    nlohmann::json classifiers = nlohmann::json::array();
    nlohmann::json members = nlohmann::json::array();
    for (const auto& [id, m] : e.members) {
        auto [it, fresh] = slot.try_emplace(m.classifier.get(), classifiers.size());
        if (fresh) classifiers.push_back(m.classifier->to_json());
        nlohmann::json jm{{"id", id}, {"classifier", it->second}};
        if (m.repair) {
            jm["repair"] = m.repair->to_json();
            jm["repair"]["predicate"] = m.repair->predicate().to_json();
        } else {
            jm["repair"] = nullptr;
        }
        members.push_back(std::move(jm));
    }
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : e.classes) {
        nlohmann::json rounds = nlohmann::json::array();
        for (const auto& r : c.rounds) {
            rounds.push_back({{"t", r.t}, {"candidate", r.candidate}, {"epsilon", r.epsilon}, {"alpha", r.alpha},
                              {"updated", r.updated}, {"running_accuracy", r.running_accuracy}});
        }
        classes.push_back({{"label", value_to_json(c.label)}, {"rounds", std::move(rounds)}});
    }
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : e.labels) labels.push_back(value_to_json(l));
    nlohmann::json j{{"labels", std::move(labels)},
                     {"binary", e.binary},
                     {"default_label", value_to_json(e.default_label)},
                     {"classes", std::move(classes)},
                     {"classifiers", std::move(classifiers)},
                     {"members", std::move(members)},
                     {"base_accuracy", e.base_accuracy},
                     {"selection_accuracy", e.selection_accuracy},
                     {"truncated", e.truncated}};
    j["single"] = e.single ? nlohmann::json(*e.single) : nlohmann::json();
    return j;
}

inline Ensemble ensemble_from_json(const nlohmann::json& j) {
    Ensemble e;
    for (const auto& l : j.at("labels")) e.labels.push_back(value_from_json(l));
    e.binary = j.at("binary").get<bool>();
    e.default_label = value_from_json(j.at("default_label"));
    for (const auto& jc : j.at("classes")) {
        ClassRounds c;
        c.label = value_from_json(jc.at("label"));
        for (const auto& jr : jc.at("rounds")) {
            Round r;
            r.t = jr.at("t").get<std::size_t>();
            r.candidate = jr.at("candidate").get<std::size_t>();
            r.epsilon = jr.at("epsilon").get<double>();
            r.alpha = jr.at("alpha").get<double>();
            r.updated = jr.at("updated").get<bool>();
            r.running_accuracy = jr.at("running_accuracy").get<double>();
            c.rounds.push_back(r);
        }
        e.classes.push_back(std::move(c));
    }
    std::vector<ClassifierPtr> classifiers;
    for (const auto& jc : j.at("classifiers")) classifiers.push_back(classifier_from_json(jc));
    for (const auto& jm : j.at("members")) {
        Member m;
        m.id = jm.at("id").get<std::size_t>();
        m.classifier = classifiers.at(jm.at("classifier").get<std::size_t>());
        const auto& jr = jm.at("repair");
        if (!jr.is_null()) {
            m.repair.emplace(predicate_from_json(jr.at("predicate")), RepairFunction::from_json(jr.at("repair")),
                             stage_from_string(jr.at("stage").get<std::string>()));
        }
        e.members.emplace(m.id, std::move(m));
    }
    if (!j.at("single").is_null()) e.single = j.at("single").get<std::size_t>();
    e.base_accuracy = j.at("base_accuracy").get<double>();
    e.selection_accuracy = j.at("selection_accuracy").get<double>();
    e.truncated = j.at("truncated").get<bool>();
    for (const auto& c : e.classes) {
        for (const auto& r : c.rounds) {
            if (!e.members.count(r.candidate)) throw ValidationError("model: round references a missing member");
        }
    }
    if (e.single && !e.members.count(*e.single)) throw ValidationError("model: fallback member missing");
    return e;
}

/// Magic, u32 version, u64 length, then the model as CBOR.
inline std::string serialize_model(const DeployedModel& m) {
    const nlohmann::json doc{{"schema", schema_to_json(m.schema)}, {"ensemble", ensemble_to_json(m.ensemble)}};
    const std::vector<std::uint8_t> cbor = nlohmann::json::to_cbor(doc);
    binary::Writer w;
    w.bytes(kModelMagic);
    w.u32(kModelVersion);
    w.u64(cbor.size());
    w.bytes(std::string_view(reinterpret_cast<const char*>(cbor.data()), cbor.size()));
    return w.take();
}

inline DeployedModel deserialize_model(std::string_view data) {
    binary::Reader r(data);
    if (data.size() < kModelMagic.size() || r.bytes(kModelMagic.size()) != kModelMagic) {
        throw ValidationError("model: not a deployed model file");
    }
    const std::uint32_t version = r.u32();
    if (version != kModelVersion) {
        throw ValidationError("model: format version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kModelVersion) + ")");
    }
    const std::uint64_t n = r.u64();
    const auto body = r.bytes(static_cast<std::size_t>(n));
    if (!r.done()) throw ValidationError("model: trailing bytes");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::from_cbor(body.begin(), body.end());
        return DeployedModel{schema_from_json(doc.at("schema")), ensemble_from_json(doc.at("ensemble"))};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model: corrupt payload: ") + e.what());
    }
}

inline void deploy(const DeployedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    const std::string bytes = serialize_model(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("write failed: " + path);
}

inline DeployedModel load_deployed(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

} // namespace boostclean
