#include "authfeed/ledger_client.hpp"

#include <stdexcept>

namespace authfeed {

Receipt Wallet::send(const Address &target, std::string_view function, Bytes args, std::uint64_t fee) {
    auto nonce = client_->account(address()).nonce;
    auto tx = Transaction::make(key_, target, std::string{function}, std::move(args), fee, nonce);
    return client_->submit(tx);
}

Address Wallet::deploy(std::string_view code_id, ByteView init, std::uint64_t value, Receipt *receipt) {
    ArgWriter args;
    args.str(code_id).bytes(init);
    auto r = send(Address{}, Ledger::kDeployFunction, std::move(args).take(), value);
    if (receipt) {
        *receipt = r;
    }
    if (!r.ok()) {
        throw std::runtime_error{"deploy failed: " + r.error};
    }
    return Address::from_bytes(r.return_value);
}

ViewResult Wallet::view(const Address &target, std::string_view function, ByteView args, std::uint64_t value) {
    return client_->view(address(), target, function, args, value);
}

std::uint64_t Wallet::balance() {
    return client_->account(address()).balance;
}

} // namespace authfeed
