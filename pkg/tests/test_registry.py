import hashlib

import pytest

from sha1_oracle import sha1_hex
from wbsn_aka.primitives import BitString, NonceSource, xor
from wbsn_aka.registry import (
    Deployment,
    DuplicateIntermediate,
    DuplicateSensor,
    init_hub,
    register_intermediate,
    register_sensor,
)

ZERO = BitString.zeros(160)


def test_empty_hub_storage():
    hub = init_hub(ZERO)
    assert hub.storage_bits == 160
    assert hub.table == [] and hub.intermediates == []


def test_init_is_deterministic():
    k = BitString(160, 12345)
    assert init_hub(k) == init_hub(k)


def test_storage_three_sensors_one_in():
    rng = NonceSource(3)
    hub = init_hub(rng.next_nonce())
    for _ in range(3):
        register_sensor(hub, rng.next_nonce(), rng.next_nonce())
    register_intermediate(hub, BitString(16, 1))
    assert hub.storage_bits == 160 + 1440 + 16 == 1616


def test_zero_keys_give_b_equal_id():
    hub = init_hub(ZERO)
    x = BitString(160, 0xDEADBEEF)
    creds = register_sensor(hub, x, ZERO)
    assert creds.b_n == x


def test_key_sum_identity_and_hash_oracle():
    rng = NonceSource(11)
    k_hn = rng.next_nonce()
    hub = init_hub(k_hn)
    for _ in range(20):
        id_n, k_n = rng.next_nonce(), rng.next_nonce()
        creds = register_sensor(hub, id_n, k_n)
        assert xor(id_n, creds.b_n) == xor(k_hn, k_n)
        assert id_n.value ^ creds.b_n.value ^ k_n.value == k_hn.value
        expected = sha1_hex(id_n.to_bytes() + k_n.to_bytes())
        assert creds.a_n.hex() == expected
        assert hub.table[-1].a_n == creds.a_n and hub.table[-1].k_n == k_n
        assert hub.table[-1].session_key is None
        assert creds.storage_bits == 640


def test_duplicate_sensor_rejected():
    hub = init_hub(ZERO)
    id_n, k_n = BitString(160, 1), BitString(160, 2)
    register_sensor(hub, id_n, k_n)
    with pytest.raises(DuplicateSensor):
        register_sensor(hub, id_n, k_n)
    assert len(hub.table) == 1


def test_register_intermediate():
    hub = init_hub(ZERO)
    state = register_intermediate(hub, BitString(16, 1))
    assert BitString(16, 1) in hub.intermediates
    assert state.storage_bits == 16
    with pytest.raises(DuplicateIntermediate):
        register_intermediate(hub, BitString(16, 1))


@pytest.mark.parametrize("m", [1, 2, 7])
def test_intermediates_grow_storage_by_16(m):
    hub = init_hub(ZERO)
    base = hub.storage_bits
    for i in range(m):
        register_intermediate(hub, BitString(16, i))
    assert hub.storage_bits - base == 16 * m


def test_wrong_widths_rejected():
    hub = init_hub(ZERO)
    with pytest.raises(ValueError):
        register_sensor(hub, BitString(16, 1), ZERO)
    with pytest.raises(ValueError):
        register_intermediate(hub, BitString(32, 1))
    with pytest.raises(ValueError):
        init_hub(BitString(128, 0))


def test_hub_never_stores_sensor_id():
    hub = init_hub(ZERO)
    id_n = BitString(160, 0xABC)
    register_sensor(hub, id_n, BitString(160, 5))
    assert id_n.to_bytes() not in hub.table_bytes()


class TestDeployment:
    def test_generate_is_deterministic(self):
        assert Deployment.generate(3, 1, 7).dumps() == Deployment.generate(3, 1, 7).dumps()
        assert Deployment.generate(3, 1, 7).dumps() != Deployment.generate(3, 1, 8).dumps()

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            Deployment.generate(0, 1, 0)
        with pytest.raises(ValueError):
            Deployment.generate(1, 0, 0)

    def test_file_roundtrip(self, tmp_path):
        dep = Deployment.generate(4, 2, 9)
        path = tmp_path / "dep.json"
        dep.write(path)
        back = Deployment.read(path)
        assert back == dep
        text = path.read_text()
        assert text == text.lower()

    def test_provision_satisfies_registration_equations(self):
        dep = Deployment.generate(5, 2, 1)
        hub, creds, ins = dep.provision()
        assert hub.storage_bits == 480 * 5 + 16 * 2 + 160
        for (id_n, k_n), c in zip(dep.sensors, creds):
            digest = hashlib.sha1(id_n.to_bytes() + k_n.to_bytes()).hexdigest()
            assert c.a_n.hex() == digest
            assert xor(xor(c.id_n, c.b_n), k_n) == dep.hub_key
        assert [i.id_in for i in ins] == dep.intermediates

    def test_malformed(self):
        with pytest.raises(ValueError):
            Deployment.from_dict({"hub_key": "00"})
