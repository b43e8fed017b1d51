import random

import pytest

from espresso import group
from espresso.errors import DecodeError, ParamError


def test_fixed_params_validate():
    group.DEFAULT_PARAMS.validate()
    group.TOY_PARAMS.validate()


def test_default_params_sizes():
    assert group.DEFAULT_PARAMS.p.bit_length() == 1024
    assert group.DEFAULT_PARAMS.q.bit_length() == 160
    assert group.TOY_PARAMS.p.bit_length() == 64
    assert group.TOY_PARAMS.q.bit_length() == 32


def test_generate_params_deterministic():
    a = group.generate_params(80, 40, seed=b"fixed")
    b = group.generate_params(80, 40, seed=b"fixed")
    assert a == b
    a.validate()
    assert a.p.bit_length() == 80
    assert a.q.bit_length() == 40
    assert (a.p - 1) % a.q == 0


def test_generate_params_rejects_bad_sizes():
    with pytest.raises(ParamError):
        group.generate_params(32, 40)
    with pytest.raises(ParamError):
        group.generate_params(63, 32)


def test_validate_rejects_corrupt_params(toy):
    bad = group.GroupParams(p=toy.p, q=toy.q + 2, g=toy.g)
    with pytest.raises(ParamError):
        bad.validate()
    bad_g = group.GroupParams(p=toy.p, q=toy.q, g=1)
    with pytest.raises(ParamError):
        bad_g.validate()


def test_hash_to_group_lands_in_subgroup(toy, rng):
    for i in range(200):
        e = group.hash_to_group(toy, b"item-%d" % i)
        assert toy.is_subgroup_element(e)


def test_hash_to_group_deterministic_and_separated(toy):
    assert group.hash_to_group(toy, b"x") == group.hash_to_group(toy, b"x")
    assert group.hash_to_group(toy, b"x") != group.hash_to_group(toy, b"y")
    with pytest.raises(ValueError):
        group.hash_to_group(toy, b"")


def test_blind_exponentiation_commutes(toy, rng):
    # (H(x)^a)^b == (H(x)^b)^a: the property the whole construction rests on
    e = group.hash_to_group(toy, b"commute")
    a = group.random_scalar(toy, rng)
    b = group.random_scalar(toy, rng)
    ab = group.element_pow(toy, group.element_pow(toy, e, a), b)
    ba = group.element_pow(toy, group.element_pow(toy, e, b), a)
    assert ab == ba


def test_scalar_inverse_round_trip(toy, rng):
    for _ in range(50):
        e = group.hash_to_group(toy, rng.getrandbits(64).to_bytes(8, "big"))
        s = group.random_scalar(toy, rng)
        masked = group.element_pow(toy, e, s)
        assert group.element_pow(toy, masked, group.scalar_inv(toy, s)) == e


def test_scalar_inv_range_checks(toy):
    with pytest.raises(ValueError):
        group.scalar_inv(toy, 0)
    with pytest.raises(ValueError):
        group.scalar_inv(toy, toy.q)


def test_element_codec_round_trip(toy, rng):
    for _ in range(20):
        e = group.hash_to_group(toy, rng.getrandbits(64).to_bytes(8, "big"))
        blob = group.encode_element(toy, e)
        assert len(blob) == toy.element_size
        assert group.decode_element(toy, blob) == e


def test_decode_element_rejects_garbage(toy):
    with pytest.raises(DecodeError) as e:
        group.decode_element(toy, b"\x00" * (toy.element_size + 1))
    assert e.value.code == "bad-length"
    with pytest.raises(DecodeError) as e:
        group.decode_element(toy, b"\x00" * toy.element_size)
    assert e.value.code == "out-of-range"
    # 2 generates Z_p^* with overwhelming probability, so it is almost
    # surely outside the order-q subgroup; check before relying on it
    if not toy.is_subgroup_element(2):
        with pytest.raises(DecodeError) as e:
            group.decode_element(toy, (2).to_bytes(toy.element_size, "big"))
        assert e.value.code == "non-subgroup"


def test_params_serialization_round_trip(toy, prod):
    for params in (toy, prod):
        assert group.deserialize_params(group.serialize_params(params)) == params


def test_params_deserialization_rejects_garbage(toy):
    blob = group.serialize_params(toy)
    with pytest.raises(DecodeError):
        group.deserialize_params(blob[:-1])
    with pytest.raises(DecodeError):
        group.deserialize_params(blob + b"\x00")


def test_random_scalar_range(toy):
    rng = random.Random(1)
    scalars = [group.random_scalar(toy, rng) for _ in range(1000)]
    assert all(1 <= s < toy.q for s in scalars)
    assert len(set(scalars)) > 990  # collisions would indicate bias
    assert 1 <= group.random_scalar(toy) < toy.q  # system-entropy path


def test_miller_rabin_basics():
    rng = random.Random(2)
    for p in (2, 3, 5, 101, 7919, (1 << 61) - 1):
        assert group.is_probable_prime(p, rng)
    for c in (0, 1, 4, 100, 7917, 561, 41041):  # incl. Carmichael numbers
        assert not group.is_probable_prime(c, rng)
