#include "lotflow/io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace lotflow {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return key == k; }) == allowed.end())
            throw SchemaError("unknown key \"" + key + "\" in " + context);
    }
}

const json& require(const json& obj, const char* key, const std::string& context) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError("missing key \"" + std::string(key) + "\" in " + context);
    return *it;
}

DemandModel parse_demand_model(const json& obj, int period) {
    const std::string context = "demand[" + std::to_string(period) + "]";
    if (!obj.is_object()) throw SchemaError(context + " must be an object");
    const std::string kind = require(obj, "kind", context).get<std::string>();
    if (kind == "poisson") {
        reject_unknown_keys(obj, {"kind", "mean"}, context);
        return DemandModel::poisson(require(obj, "mean", context).get<double>());
    }
    if (kind == "pmf") {
        reject_unknown_keys(obj, {"kind", "values", "probs"}, context);
        const auto values = require(obj, "values", context).get<std::vector<int>>();
        const auto probs = require(obj, "probs", context).get<std::vector<double>>();
        if (values.size() != probs.size())
            throw SchemaError(context + ": values and probs lengths differ");
        Pmf pmf(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) pmf[i] = {values[i], probs[i]};
        try {
            return DemandModel::from_pmf(std::move(pmf));
        } catch (const std::invalid_argument& e) {
            throw SchemaError(context + ": " + e.what());
        }
    }
    throw SchemaError(context + ": unknown kind \"" + kind + "\"");
}

json demand_model_to_json(const DemandModel& m) {
    json obj;
    if (m.kind == DemandModel::Kind::Poisson) {
        obj["kind"] = "poisson";
        obj["mean"] = m.mean;
    } else {
        obj["kind"] = "pmf";
        json values = json::array(), probs = json::array();
        for (const auto& e : m.pmf) {
            values.push_back(e.value);
            probs.push_back(e.prob);
        }
        obj["values"] = values;
        obj["probs"] = probs;
    }
    return obj;
}

}  // namespace

Instance parse_instance_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("instance file is not valid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw SchemaError("instance file must hold a JSON object");
    reject_unknown_keys(obj, {"T", "B0", "I0", "p", "a", "v", "h", "pi", "b", "demand"},
                        "instance");
    Instance inst;
    inst.T = require(obj, "T", "instance").get<int>();
    inst.B0 = require(obj, "B0", "instance").get<double>();
    inst.I0 = require(obj, "I0", "instance").get<int>();
    inst.p = require(obj, "p", "instance").get<double>();
    inst.a = require(obj, "a", "instance").get<double>();
    inst.v = require(obj, "v", "instance").get<double>();
    inst.h = require(obj, "h", "instance").get<double>();
    inst.pi = require(obj, "pi", "instance").get<double>();
    inst.b = require(obj, "b", "instance").get<double>();
    const json& demand = require(obj, "demand", "instance");
    if (!demand.is_array()) throw SchemaError("\"demand\" must be an array");
    for (std::size_t t = 0; t < demand.size(); ++t)
        inst.demand.push_back(parse_demand_model(demand[t], static_cast<int>(t)));
    try {
        inst.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
    return inst;
}

Instance load_instance(const std::filesystem::path& file) {
    try {
        return parse_instance_json(read_text_file(file));
    } catch (const SchemaError& e) {
        throw SchemaError(file.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw SchemaError(e.what());
    }
}

Policy load_policy(const std::filesystem::path& file) {
    try {
        return parse_policy_json(read_text_file(file));
    } catch (const SchemaError& e) {
        throw SchemaError(file.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw SchemaError(e.what());
    }
}

std::string instance_to_json(const Instance& inst) {
    json obj;
    obj["T"] = inst.T;
    obj["B0"] = inst.B0;
    obj["I0"] = inst.I0;
    obj["p"] = inst.p;
    obj["a"] = inst.a;
    obj["v"] = inst.v;
    obj["h"] = inst.h;
    obj["pi"] = inst.pi;
    obj["b"] = inst.b;
    json demand = json::array();
    for (const auto& m : inst.demand) demand.push_back(demand_model_to_json(m));
    obj["demand"] = demand;
    return obj.dump(2) + "\n";
}

Policy parse_policy_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("policy file is not valid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw SchemaError("policy file must hold a JSON object");
    const std::string type = require(obj, "type", "policy").get<std::string>();
    const auto ints = [&](const char* key) {
        return require(obj, key, "policy").get<std::vector<int>>();
    };
    const auto bools = [&](const char* key) {
        std::vector<std::uint8_t> out;
        for (int x : ints(key)) {
            if (x != 0 && x != 1) throw SchemaError("policy: R entries must be 0 or 1");
            out.push_back(static_cast<std::uint8_t>(x));
        }
        return out;
    };
    if (type == "RQ") {
        reject_unknown_keys(obj, {"type", "R", "Q"}, "policy");
        return Policy::rq(bools("R"), ints("Q"));
    }
    if (type == "RS") {
        reject_unknown_keys(obj, {"type", "R", "S"}, "policy");
        return Policy::rs(bools("R"), ints("S"));
    }
    if (type == "sS") {
        reject_unknown_keys(obj, {"type", "s", "S"}, "policy");
        return Policy::ss(ints("s"), ints("S"));
    }
    if (type == "sQS") {
        reject_unknown_keys(obj, {"type", "s", "Qbar", "S"}, "policy");
        return Policy::sqs(ints("s"), ints("Qbar"), ints("S"));
    }
    throw SchemaError("policy: unknown type \"" + type + "\"");
}

std::string policy_to_json(const Policy& policy) {
    json obj;
    const auto ints = [](const std::vector<int>& xs) { return json(xs); };
    switch (policy.family) {
        case PolicyFamily::RQ:
            obj["type"] = "RQ";
            obj["R"] = json(std::vector<int>(policy.R.begin(), policy.R.end()));
            obj["Q"] = ints(policy.Q);
            break;
        case PolicyFamily::RS:
            obj["type"] = "RS";
            obj["R"] = json(std::vector<int>(policy.R.begin(), policy.R.end()));
            obj["S"] = ints(policy.S);
            break;
        case PolicyFamily::SS:
            obj["type"] = "sS";
            obj["s"] = ints(policy.s);
            obj["S"] = ints(policy.S);
            break;
        case PolicyFamily::SQS:
            obj["type"] = "sQS";
            obj["s"] = ints(policy.s);
            obj["Qbar"] = ints(policy.Qbar);
            obj["S"] = ints(policy.S);
            break;
        case PolicyFamily::SDP:
            throw std::invalid_argument("SDP action tables are exported via solution_dump");
    }
    return obj.dump(2) + "\n";
}

std::string solution_dump(const SdpSolution& sol) {
    std::ostringstream os;
    os << "value " << std::fixed << std::setprecision(4) << sol.value << "\n";
    for (std::size_t t = 0; t < sol.action_table.size(); ++t) {
        std::vector<std::uint64_t> keys;
        keys.reserve(sol.action_table[t].size());
        for (const auto& [key, q] : sol.action_table[t]) {
            (void)q;
            keys.push_back(key);
        }
        std::sort(keys.begin(), keys.end());
        for (const auto key : keys) {
            // Keys sort by (inventory, capital); decode for readability.
            const auto inv = static_cast<std::int64_t>(key >> 43) - (1LL << 20);
            const auto cap4 = static_cast<std::int64_t>(key & ((1ULL << 43) - 1)) - (1LL << 42);
            os << "t=" << t + 1 << " I=" << inv << " B=" << std::setprecision(4)
               << static_cast<double>(cap4) / 1e4 << " Q=" << sol.action_table[t].at(key) << "\n";
        }
    }
    return os.str();
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + file.string());
}

std::string read_text_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open: " + file.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace lotflow
