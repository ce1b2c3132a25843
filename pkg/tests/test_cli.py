"""
End-to-end tests for the otslab command line

Feature: cli
Golden outputs and exit codes for keygen, sign, verify, rand, params, bench
and audit. Every test runs against a temporary key directory and bench
database.
"""
import csv
import io
import os

import pytest

import app
from app import ExitCode
from otslab import hashchain, keystore

# ============================================================================
# Helpers
# ============================================================================

DEMO_KEYGEN = ["keygen", "--scheme", "prng-ots", "--params", "posix", "--w", "24", "--seed-hex", "0x13579BDE"]


def run(capsys, *argv):
    code = app.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def fields(output):
    result = {}
    for line in output.splitlines():
        if "=" in line and not line.startswith("#"):
            name, value = line.split("=", 1)
            result[name] = value
    return result


@pytest.fixture
def demo_key(isolated_env, capsys):
    prefix = os.path.join(isolated_env, "demo")
    code, out, _ = run(capsys, *DEMO_KEYGEN, "--out", prefix)
    assert code == ExitCode.ACCEPT
    return prefix


@pytest.fixture
def demo_signature(demo_key, capsys):
    code, out, _ = run(capsys, "sign", "--key", demo_key + ".key", "--t", "12345678")
    assert code == ExitCode.ACCEPT
    return demo_key + ".sig"


# ============================================================================
# keygen / sign / verify
# ============================================================================

class TestKeygenSignVerify:

    def test_keygen_prints_demo_public_key(self, isolated_env, capsys):
        code, out, _ = run(capsys, *DEMO_KEYGEN, "--out", os.path.join(isolated_env, "demo"))
        assert code == ExitCode.ACCEPT
        assert fields(out)["P"] == "0xE9694A840B48"
        assert os.path.exists(os.path.join(isolated_env, "demo.key"))
        assert os.path.exists(os.path.join(isolated_env, "demo.pub"))

    def test_keygen_defaults_to_key_dir(self, isolated_env, capsys):
        code, out, _ = run(capsys, *DEMO_KEYGEN)
        assert code == ExitCode.ACCEPT
        assert fields(out)["private_key"] == os.path.join(isolated_env, "prng-ots-posix.key")

    def test_keygen_sequential_mode_agrees(self, isolated_env, capsys):
        code, out, _ = run(capsys, "keygen", "--scheme", "prng-ots", "--params", "gcc", "--w", "12",
                           "--seed-hex", "0x2A", "--out", os.path.join(isolated_env, "a"), "--mode", "sequential")
        _, out_jump, _ = run(capsys, "keygen", "--scheme", "prng-ots", "--params", "gcc", "--w", "12",
                             "--seed-hex", "0x2A", "--out", os.path.join(isolated_env, "b"))
        assert code == ExitCode.ACCEPT
        assert fields(out)["P"] == fields(out_jump)["P"]

    def test_keygen_csv_format(self, isolated_env, capsys):
        code, out, _ = run(capsys, "--format", "csv", *DEMO_KEYGEN, "--out", os.path.join(isolated_env, "demo"))
        header, row = out.strip().split("\n")
        assert header.split(",")[:4] == ["scheme", "paramset", "w", "P"]
        assert row.split(",")[3] == "0xE9694A840B48"

    def test_sign_prints_demo_signature(self, demo_key, capsys):
        code, out, _ = run(capsys, "sign", "--key", demo_key + ".key", "--t", "12345678", "--verbose")
        assert code == ExitCode.ACCEPT
        values = fields(out)
        assert values["S"] == "0xECE38D6DD84C"
        assert values["f_t"] == "0xECE653813E21"
        assert values["signature"] == demo_key + ".sig"

    def test_second_sign_exits_with_reuse(self, demo_signature, demo_key, capsys):
        code, _, err = run(capsys, "sign", "--key", demo_key + ".key", "--t", "1")
        assert code == ExitCode.REUSE
        assert "used" in err or "claimed" in err

    def test_sign_out_of_range_is_usage_error(self, demo_key, capsys):
        code, _, err = run(capsys, "sign", "--key", demo_key + ".key", "--t", str(2**24))
        assert code == ExitCode.USAGE
        assert not keystore.load_key(demo_key + ".key").used

    def test_sign_t_zero_warns(self, demo_key, capsys):
        code, out, err = run(capsys, "sign", "--key", demo_key + ".key", "--t", "0")
        assert code == ExitCode.ACCEPT
        assert "t=0" in err
        assert fields(out)["S"] == "0x000013579BDE"

    def test_sign_requires_t_or_message(self, demo_key, capsys):
        code, _, _ = run(capsys, "sign", "--key", demo_key + ".key")
        assert code == ExitCode.USAGE

    def test_sign_missing_output_dir_keeps_key_unused(self, demo_key, isolated_env, capsys):
        out = os.path.join(isolated_env, "nodir", "x.sig")
        code, stdout, err = run(capsys, "sign", "--key", demo_key + ".key", "--t", "5", "--out", out)
        assert code == ExitCode.USAGE
        assert "nodir" in err
        assert not keystore.load_key(demo_key + ".key").used
        assert not os.path.exists(keystore.claim_path(demo_key + ".key"))

    def test_sign_write_failure_still_prints_signature(self, demo_key, capsys, monkeypatch):
        def failing_save(signature, path):
            raise OSError("disk full")

        monkeypatch.setattr(keystore, "save_signature", failing_save)
        code, out, _ = run(capsys, "sign", "--key", demo_key + ".key", "--t", "12345678")
        assert code == ExitCode.USAGE
        assert keystore.load_key(demo_key + ".key").used
        assert fields(out)["S"] == "0xECE38D6DD84C"

    def test_sign_csv_quotes_path_with_comma(self, demo_key, isolated_env, capsys):
        out_path = os.path.join(isolated_env, "a,b.sig")
        code, out, _ = run(capsys, "--format", "csv", "sign", "--key", demo_key + ".key", "--t", "12345678",
                           "--out", out_path)
        assert code == ExitCode.ACCEPT
        header, row = list(csv.reader(io.StringIO(out)))
        assert header == ["t", "S", "signature"]
        assert row == ["12345678", "0xECE38D6DD84C", out_path]

    def test_verify_accepts_demo_signature(self, demo_signature, demo_key, capsys):
        code, out, _ = run(capsys, "--verbose", "verify", "--pub", demo_key + ".pub", "--sig-file", demo_signature)
        assert code == ExitCode.ACCEPT
        values = fields(out)
        assert values["f_0(S)"] == "0xECE653813E21"
        assert values["V"] == "0xE9694A840B48"
        assert values["result"] == "accepted"

    def test_verify_hex_signature(self, demo_key, capsys):
        code, out, _ = run(capsys, "verify", "--pub", demo_key + ".pub", "--sig", "0xece38d6dd84c",
                           "--t", "12345678")
        assert code == ExitCode.ACCEPT
        assert fields(out)["result"] == "accepted"

    def test_verify_wrong_t_rejects(self, demo_key, capsys):
        code, out, _ = run(capsys, "verify", "--pub", demo_key + ".pub", "--sig", "0xECE38D6DD84C",
                           "--t", "12345679")
        assert code == ExitCode.REJECT
        assert fields(out)["result"] == "rejected"

    def test_verify_tampered_signature_rejects(self, demo_key, capsys):
        code, _, _ = run(capsys, "verify", "--pub", demo_key + ".pub", "--sig", "0xECE38D6DD84D",
                         "--t", "12345678")
        assert code == ExitCode.REJECT

    def test_verify_hex_without_t_is_usage_error(self, demo_key, capsys):
        code, _, err = run(capsys, "verify", "--pub", demo_key + ".pub", "--sig", "0xECE38D6DD84C")
        assert code == ExitCode.USAGE
        assert "--t" in err

    def test_verify_malformed_hex_is_usage_error(self, demo_key, capsys):
        code, _, _ = run(capsys, "verify", "--pub", demo_key + ".pub", "--sig", "0xZZ", "--t", "1")
        assert code == ExitCode.USAGE

    def test_verify_non_utf8_key_file_is_usage_error(self, isolated_env, capsys):
        path = os.path.join(isolated_env, "bad.pub")
        with open(path, "wb") as f:
            f.write(b"scheme=prng-ots\nparamset=posix\xff\n")
        code, _, err = run(capsys, "verify", "--pub", path, "--sig", "0x01", "--t", "1")
        assert code == ExitCode.USAGE
        assert "UTF-8" in err

    def test_wots_message_file_flow(self, isolated_env, capsys):
        prefix = os.path.join(isolated_env, "wots")
        message = os.path.join(isolated_env, "msg.txt")
        with open(message, "wb") as f:
            f.write(b"hello")
        code, out, _ = run(capsys, "keygen", "--scheme", "wots", "--w", "8", "--out", prefix)
        assert code == ExitCode.ACCEPT
        assert fields(out)["R"].startswith("0x")

        code, _, _ = run(capsys, "sign", "--key", prefix + ".key", "--message-file", message)
        assert code == ExitCode.ACCEPT
        code, out, _ = run(capsys, "--verbose", "verify", "--pub", prefix + ".pub", "--sig-file", prefix + ".sig",
                           "--message-file", message)
        assert code == ExitCode.ACCEPT
        assert "xi" in fields(out)

        with open(message, "wb") as f:
            f.write(b"hello!")
        code, _, _ = run(capsys, "verify", "--pub", prefix + ".pub", "--sig-file", prefix + ".sig",
                         "--message-file", message)
        same_t = hashchain.normalize_message(b"hello", 8) == hashchain.normalize_message(b"hello!", 8)
        assert code == (ExitCode.ACCEPT if same_t else ExitCode.REJECT)

    def test_missing_required_flag(self, isolated_env, capsys):
        code, _, err = run(capsys, "keygen", "--scheme", "prng-ots", "--params", "posix")
        assert code == ExitCode.USAGE
        assert "--w" in err

    def test_prng_keygen_requires_params(self, isolated_env, capsys):
        code, _, _ = run(capsys, "keygen", "--scheme", "prng-ots", "--w", "8")
        assert code == ExitCode.USAGE

    def test_unknown_paramset(self, isolated_env, capsys):
        code, _, err = run(capsys, "keygen", "--scheme", "prng-ots", "--params", "randu", "--w", "8")
        assert code == ExitCode.USAGE
        assert "randu" in err


# ============================================================================
# rand / params
# ============================================================================

class TestRandAndParams:

    def test_rand_posix_golden(self, isolated_env, capsys):
        code, out, _ = run(capsys, "rand", "--params", "posix", "--seed", "1", "--count", "2")
        assert code == ExitCode.ACCEPT
        assert out.split() == ["0xBB1AD5732407", "0x19B89CD8A106"]

    def test_rand_verbose_includes_seed_value(self, isolated_env, capsys):
        _, out, _ = run(capsys, "rand", "--params", "posix", "--seed", "0x1", "--count", "1", "--verbose")
        assert out.split() == ["f_0=0x0005DEECE66C", "f_1=0xBB1AD5732407"]

    def test_rand_mmix(self, isolated_env, capsys):
        a, c = 6364136223846793005, 1442695040888963407
        expected = (a * (a ^ 1) + c) % 2**64
        _, out, _ = run(capsys, "rand", "--params", "mmix", "--seed", "1", "--count", "1")
        assert out.strip() == "0x%016X" % expected

    def test_rand_custom_params(self, isolated_env, capsys):
        code, out, _ = run(capsys, "--custom-params", "knuth16:0x6F05:1:16",
                           "rand", "--params", "knuth16", "--seed", "1", "--count", "1")
        assert code == ExitCode.ACCEPT
        assert out.strip() == "0x%04X" % ((0x6F05 * 0x6F04 + 1) % 2**16)

    def test_params_table(self, isolated_env, capsys):
        code, out, _ = run(capsys, "params")
        assert code == ExitCode.ACCEPT
        posix_line = next(line for line in out.splitlines() if line.startswith("posix"))
        assert posix_line.split()[-3:] == ["48", "48", "48"]

    def test_params_csv(self, isolated_env, capsys):
        _, out, _ = run(capsys, "params", "--format", "csv")
        lines = out.strip().split("\n")
        assert lines[0].startswith("name,a,c,k")
        assert any(line.startswith("gcc,1664525,1013904223,31,") for line in lines)


# ============================================================================
# audit
# ============================================================================

class TestAudit:

    def test_recover_seed_from_signature(self, demo_signature, capsys):
        code, out, _ = run(capsys, "audit", "recover-seed", "--sig-file", demo_signature)
        assert code == ExitCode.ACCEPT
        assert out.startswith("# ⚠️ AUDIT")
        assert fields(out)["p"] == "0x000013579BDE"

    def test_recover_seed_from_public(self, demo_key, capsys):
        code, out, _ = run(capsys, "audit", "recover-seed", "--pub", demo_key + ".pub", "--from-public")
        assert code == ExitCode.ACCEPT
        assert fields(out)["p"] == "0x000013579BDE"

    def test_recover_from_public_needs_flag(self, demo_key, capsys):
        code, _, _ = run(capsys, "audit", "recover-seed", "--pub", demo_key + ".pub")
        assert code == ExitCode.USAGE

    def test_forge_forward_verifies(self, demo_signature, demo_key, isolated_env, capsys):
        forged_path = os.path.join(isolated_env, "forged.sig")
        code, out, _ = run(capsys, "audit", "forge-forward", "--sig-file", demo_signature,
                           "--t-target", str(2**24 - 1), "--pub", demo_key + ".pub", "--out", forged_path)
        assert code == ExitCode.ACCEPT
        values = fields(out)
        assert values["forgery_verifies"] == "true"
        assert values["S"] == "0x%012X" % (25214903917 ^ 0xE9694A840B48)

        code, _, _ = run(capsys, "verify", "--pub", demo_key + ".pub", "--sig-file", forged_path)
        assert code == ExitCode.ACCEPT

    def test_forge_backward_is_usage_error(self, demo_signature, capsys):
        code, _, _ = run(capsys, "audit", "forge-forward", "--sig-file", demo_signature, "--t-target", "5")
        assert code == ExitCode.USAGE


# ============================================================================
# bench
# ============================================================================

class TestBenchCommand:

    def test_csv_summary_has_twelve_rows(self, isolated_env, capsys):
        raw = os.path.join(isolated_env, "raw.csv")
        code, out, _ = run(capsys, "bench", "--w", "4", "--trials", "2", "--warmup", "0",
                           "--format", "csv", "--raw-csv", raw)
        assert code == ExitCode.ACCEPT
        lines = out.strip().split("\n")
        assert lines[0].startswith("scheme,paramset,operation,mode,min_ns")
        assert len(lines) == 13
        with open(raw, encoding="utf-8") as f:
            assert len(f.read().strip().split("\n")) == 1 + 4 * 3 * 2

    def test_text_report_with_speedup(self, isolated_env, capsys):
        code, out, _ = run(capsys, "bench", "--params", "gcc", "--w", "6", "--trials", "2",
                           "--warmup", "0", "--mode", "both")
        assert code == ExitCode.ACCEPT
        assert "jump speedup for gcc keygen" in out

    def test_archive_round_trip(self, isolated_env, capsys):
        code, _, err = run(capsys, "bench", "--params", "vb", "--w", "4", "--trials", "2", "--warmup", "0",
                           "--archive", "--note", "ci")
        assert code == ExitCode.ACCEPT
        assert "archived as run 1" in err

        code, out, _ = run(capsys, "bench", "--list-runs")
        assert fields(out)["note"] == "ci"

        code, out, _ = run(capsys, "bench", "--from-run", "1", "--format", "csv")
        assert code == ExitCode.ACCEPT
        assert len(out.strip().split("\n")) == 4

    def test_missing_run_is_usage_error(self, isolated_env, capsys):
        code, _, _ = run(capsys, "bench", "--from-run", "42")
        assert code == ExitCode.USAGE

    def test_mismatched_scheme_and_params(self, isolated_env, capsys):
        code, _, _ = run(capsys, "bench", "--schemes", "wots", "--params", "gcc", "--w", "4")
        assert code == ExitCode.USAGE
