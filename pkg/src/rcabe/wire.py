"""Binary file formats for keys, ciphertexts, trapdoors, and bundles.

Every file starts with a 4-byte magic, a version byte, and a type byte;
variable-length sections are u32-length-prefixed.  The `*_core_bytes`
helpers return exactly the group/scalar storage that the published size
accounting charges (payloads, labels, and envelopes excluded).
"""

from __future__ import annotations

import json
import struct

from . import lsss
from .pairing import BilinearGroup, SerializationError
from .primitives import AttestationKey
from .scheme import (
    Certificate,
    CiphertextRecord,
    MasterSecret,
    Metadata,
    PublicParams,
    PublicShadow,
    SearchBundle,
    SecretKey,
    SystemKeys,
    Trapdoor,
    TrustedAuthority,
)

MAGIC = b"RCAB"
VERSION = 1

T_PP = 1
T_TA = 2
T_SK = 3
T_PK = 4
T_CT = 5
T_TD = 6
T_BUNDLE = 7
T_CERT = 8


class FormatError(Exception):
    """File does not parse as the expected artifact."""


def _header(kind: int) -> bytes:
    return MAGIC + bytes([VERSION, kind])


class _Reader:
    def __init__(self, data: bytes, kind: int) -> None:
        if len(data) < 6 or data[:4] != MAGIC:
            raise FormatError("bad magic")
        if data[4] != VERSION:
            raise FormatError("unsupported version %d" % data[4])
        if data[5] != kind:
            raise FormatError("expected artifact type %d, found %d" % (kind, data[5]))
        self.data = data
        self.pos = 6

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def blob(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> None:
        if self.pos != len(self.data):
            raise FormatError("trailing bytes")


def _blob(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


# ---------------------------------------------------------------------------
# Core byte accounting (the storage-cost tables measure exactly these)
# ---------------------------------------------------------------------------

def pp_core_bytes(pub: PublicParams) -> bytes:
    g = pub.group
    return (
        g.ser_g(pub.g)
        + g.ser_g(pub.id_base)
        + g.ser_g(pub.blind_base)
        + g.ser_g(pub.aux_base)
        + g.ser_gt(pub.gt_base)
        + g.ser_gt(pub.gt_auth)
    )


def sk_core_bytes(group: BilinearGroup, sk: SecretKey) -> bytes:
    out = group.ser_g(sk.anchor)
    for label in sk.attrs:
        out += group.ser_g(sk.attr_elems[label])
    for scalar in (sk.id_tag, sk.mask, sk.link, sk.attr_blind, sk.tag_blind):
        out += group.ser_zp(scalar)
    return out


def ct_core_bytes(group: BilinearGroup, ct: CiphertextRecord) -> bytes:
    out = (
        group.ser_g(ct.g_s)
        + group.ser_g(ct.id_s)
        + group.ser_g(ct.blind_s)
        + group.ser_g(ct.aux_s)
        + group.ser_gt(ct.blind_ct)
        + group.ser_gt(ct.kw_tag)
    )
    for v in ct.row_scalars:
        out += group.ser_zp(v)
    for v in ct.row_scalars_aux:
        out += group.ser_zp(v)
    return out


def metadata_record(md: Metadata) -> bytes:
    return ("event=%s\nregion=%s\ntime=%r\n" % (md.event, md.region, md.time)).encode()


def parse_metadata(data: bytes) -> Metadata:
    fields = {}
    for line in data.decode().splitlines():
        if not line:
            continue
        key, _, value = line.partition("=")
        fields[key] = value
    try:
        return Metadata(
            event=fields["event"], region=fields["region"], time=float(fields["time"])
        )
    except (KeyError, ValueError) as exc:
        raise FormatError("bad metadata record") from exc


# ---------------------------------------------------------------------------
# Public parameters (carry the group so every other file can omit it)
# ---------------------------------------------------------------------------

def pp_to_bytes(pub: PublicParams) -> bytes:
    g = pub.group
    out = _header(T_PP)
    out += struct.pack(">H", g.security_level)
    out += _blob(int(g.p).to_bytes(g.fp_bytes, "big"))
    out += _blob(int(g.r).to_bytes(g.zp_bytes, "big"))
    out += _blob(int(g.h).to_bytes((int(g.h).bit_length() + 7) // 8, "big"))
    out += pp_core_bytes(pub)
    return out


def pp_from_bytes(data: bytes, counter=None) -> PublicParams:
    r = _Reader(data, T_PP)
    level = r.u16()
    p = int.from_bytes(r.blob(), "big")
    order = int.from_bytes(r.blob(), "big")
    cof = int.from_bytes(r.blob(), "big")
    gb = level // 4
    try:
        group = BilinearGroup(security_level=level, p=p, r=order, h=cof,
                              g=_de_point(p, r.take(gb)))
        if counter is not None:
            group.counter = counter
        pub = PublicParams(
            group=group,
            g=group.g,
            id_base=group.de_g(r.take(gb)),
            blind_base=group.de_g(r.take(gb)),
            aux_base=group.de_g(r.take(gb)),
            gt_base=group.de_gt(r.take(gb)),
            gt_auth=group.de_gt(r.take(gb)),
        )
    except SerializationError as exc:
        raise FormatError(str(exc)) from exc
    r.done()
    return pub


def _de_point(p: int, data: bytes):
    half = len(data) // 2
    x = int.from_bytes(data[:half], "big")
    y = int.from_bytes(data[half:], "big")
    if (y * y - (x * x * x + x)) % p != 0:
        raise FormatError("generator not on curve")
    return (x, y)


# ---------------------------------------------------------------------------
# Trusted-authority state (master secret, attestation key, registry)
# ---------------------------------------------------------------------------

def ta_to_bytes(ta: TrustedAuthority) -> bytes:
    g = ta.public.group
    m = ta.keys.master
    out = _header(T_TA)
    out += g.ser_zp(m.master_exp) + g.ser_zp(m.blind_exp) + g.ser_zp(m.id_exp)
    out += _blob(m.trace_key)
    out += _blob(ta.attest._priv.private_bytes_raw())
    registry = {
        uid: {
            "info": cert.vehicle_info,
            "sig": cert.attestation.hex(),
            "status": cert.status,
        }
        for uid, cert in sorted(ta.registry.items())
    }
    state = {"registry": registry, "revoked": sorted(ta.revoked_ids)}
    out += _blob(json.dumps(state, sort_keys=True).encode())
    return out


def ta_from_bytes(data: bytes, pub: PublicParams) -> TrustedAuthority:
    g = pub.group
    r = _Reader(data, T_TA)
    master = MasterSecret(
        master_exp=g.de_zp(r.take(g.zp_bytes)),
        blind_exp=g.de_zp(r.take(g.zp_bytes)),
        id_exp=g.de_zp(r.take(g.zp_bytes)),
        trace_key=r.blob(),
    )
    attest = AttestationKey(r.blob())
    state = json.loads(r.blob().decode())
    r.done()
    ta = TrustedAuthority(SystemKeys(public=pub, master=master), attest)
    for uid, entry in state["registry"].items():
        ta.registry[uid] = Certificate(
            user_id=uid,
            vehicle_info=entry["info"],
            attestation=bytes.fromhex(entry["sig"]),
            status=entry["status"],
        )
    ta.revoked_ids = set(state["revoked"])
    return ta


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

def cert_to_bytes(cert: Certificate) -> bytes:
    out = _header(T_CERT)
    out += _blob(cert.user_id.encode())
    out += _blob(cert.vehicle_info.encode())
    out += _blob(cert.attestation)
    out += _blob(cert.status.encode())
    return out


def cert_from_bytes(data: bytes) -> Certificate:
    r = _Reader(data, T_CERT)
    cert = Certificate(
        user_id=r.blob().decode(),
        vehicle_info=r.blob().decode(),
        attestation=r.blob(),
        status=r.blob().decode(),
    )
    r.done()
    return cert


# ---------------------------------------------------------------------------
# Secret keys and public shadows
# ---------------------------------------------------------------------------

def sk_to_bytes(group: BilinearGroup, sk: SecretKey) -> bytes:
    out = _header(T_SK)
    out += struct.pack(">H", len(sk.attrs))
    out += sk_core_bytes(group, sk)
    for label in sk.attrs:
        out += _blob(label.encode())
    out += _blob(sk.identity_ct)
    return out


def sk_from_bytes(data: bytes, group: BilinearGroup) -> SecretKey:
    r = _Reader(data, T_SK)
    count = r.u16()
    try:
        anchor = group.de_g(r.take(group.g_bytes))
        elems = [group.de_g(r.take(group.g_bytes)) for _ in range(count)]
        id_tag = group.de_zp(r.take(group.zp_bytes))
        mask = group.de_zp(r.take(group.zp_bytes))
        link = group.de_zp(r.take(group.zp_bytes))
        attr_blind = group.de_zp(r.take(group.zp_bytes))
        tag_blind = group.de_zp(r.take(group.zp_bytes))
    except SerializationError as exc:
        raise FormatError(str(exc)) from exc
    labels = [r.blob().decode() for _ in range(count)]
    identity_ct = r.blob()
    r.done()
    return SecretKey(
        identity_ct=identity_ct,
        id_tag=id_tag,
        anchor=anchor,
        attr_elems=dict(zip(labels, elems)),
        mask=mask,
        link=link,
        attr_blind=attr_blind,
        tag_blind=tag_blind,
        attrs=tuple(labels),
    )


def pk_to_bytes(group: BilinearGroup, pk: PublicShadow) -> bytes:
    out = _header(T_PK)
    out += struct.pack(">H", len(pk.attrs))
    out += group.ser_g(pk.anchor_pub)
    out += group.ser_gt(pk.gt_pub)
    for label in pk.attrs:
        out += group.ser_g(pk.attr_pub[label])
    out += group.ser_g(pk.link_pub)
    out += group.ser_g(pk.tag_pub)
    for label in pk.attrs:
        out += _blob(label.encode())
    out += _blob(pk.key_tag.encode())
    return out


def pk_from_bytes(data: bytes, group: BilinearGroup) -> PublicShadow:
    r = _Reader(data, T_PK)
    count = r.u16()
    try:
        anchor_pub = group.de_g(r.take(group.g_bytes))
        gt_pub = group.de_gt(r.take(group.gt_bytes))
        elems = [group.de_g(r.take(group.g_bytes)) for _ in range(count)]
        link_pub = group.de_g(r.take(group.g_bytes))
        tag_pub = group.de_g(r.take(group.g_bytes))
    except SerializationError as exc:
        raise FormatError(str(exc)) from exc
    labels = [r.blob().decode() for _ in range(count)]
    key_tag = r.blob().decode()
    r.done()
    return PublicShadow(
        anchor_pub=anchor_pub,
        gt_pub=gt_pub,
        attr_pub=dict(zip(labels, elems)),
        link_pub=link_pub,
        tag_pub=tag_pub,
        attrs=tuple(labels),
        key_tag=key_tag,
    )


# ---------------------------------------------------------------------------
# Ciphertext records
# ---------------------------------------------------------------------------

def ct_to_bytes(group: BilinearGroup, ct: CiphertextRecord) -> bytes:
    out = _header(T_CT)
    out += bytes([1 if ct.encrypted else 0])
    out += struct.pack(">H", ct.policy.rows)
    out += ct_core_bytes(group, ct)
    out += _blob(ct.policy.source_expr.encode())
    out += _blob(metadata_record(ct.metadata))
    out += _blob(ct.payload)
    return out


def ct_from_bytes(data: bytes, group: BilinearGroup) -> CiphertextRecord:
    r = _Reader(data, T_CT)
    encrypted = r.take(1) != b"\x00"
    rows = r.u16()
    try:
        g_s = group.de_g(r.take(group.g_bytes))
        id_s = group.de_g(r.take(group.g_bytes))
        blind_s = group.de_g(r.take(group.g_bytes))
        aux_s = group.de_g(r.take(group.g_bytes))
        blind_ct = group.de_gt(r.take(group.gt_bytes))
        kw_tag = group.de_gt(r.take(group.gt_bytes))
        row_scalars = [group.de_zp(r.take(group.zp_bytes)) for _ in range(rows)]
        row_scalars_aux = [group.de_zp(r.take(group.zp_bytes)) for _ in range(rows)]
    except SerializationError as exc:
        raise FormatError(str(exc)) from exc
    policy_text = r.blob().decode()
    metadata = parse_metadata(r.blob())
    payload = r.blob()
    r.done()
    try:
        policy = lsss.compile_policy(policy_text, group.r)
    except lsss.PolicyError as exc:
        raise FormatError("stored policy does not compile") from exc
    if policy.rows != rows:
        raise FormatError("policy row count mismatch")
    return CiphertextRecord(
        blind_ct=blind_ct,
        g_s=g_s,
        id_s=id_s,
        blind_s=blind_s,
        aux_s=aux_s,
        row_scalars=row_scalars,
        row_scalars_aux=row_scalars_aux,
        kw_tag=kw_tag,
        payload=payload,
        encrypted=encrypted,
        policy=policy,
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Trapdoors and search bundles
# ---------------------------------------------------------------------------

def td_to_bytes(group: BilinearGroup, td: Trapdoor) -> bytes:
    out = _header(T_TD)
    for scalar in (td.unblind, td.gamma_q, td.id_tag, td.main_q, td.aux_q,
                   td.scale_q, td.kw_q):
        out += group.ser_zp(scalar)
    return out


def td_from_bytes(data: bytes, group: BilinearGroup) -> Trapdoor:
    r = _Reader(data, T_TD)
    try:
        vals = [group.de_zp(r.take(group.zp_bytes)) for _ in range(7)]
    except SerializationError as exc:
        raise FormatError(str(exc)) from exc
    r.done()
    return Trapdoor(*vals)


def bundle_to_bytes(group: BilinearGroup, b: SearchBundle) -> bytes:
    out = _header(T_BUNDLE)
    out += bytes([1 if b.encrypted else 0])
    out += group.ser_gt(b.blind_ct)
    out += group.ser_gt(b.gamma_part)
    out += group.ser_gt(b.lam_part)
    out += _blob(b.payload)
    return out


def bundle_from_bytes(data: bytes, group: BilinearGroup) -> SearchBundle:
    r = _Reader(data, T_BUNDLE)
    encrypted = r.take(1) != b"\x00"
    try:
        blind_ct = group.de_gt(r.take(group.gt_bytes))
        gamma_part = group.de_gt(r.take(group.gt_bytes))
        lam_part = group.de_gt(r.take(group.gt_bytes))
    except SerializationError as exc:
        raise FormatError(str(exc)) from exc
    payload = r.blob()
    r.done()
    return SearchBundle(
        blind_ct=blind_ct,
        gamma_part=gamma_part,
        lam_part=lam_part,
        payload=payload,
        encrypted=encrypted,
    )
