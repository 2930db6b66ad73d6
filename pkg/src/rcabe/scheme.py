"""Traceable ciphertext-policy ABE with keyword search.

The trusted authority runs the global setup and issues per-user key pairs:
a secret key whose scalar tag encodes the holder's AEAD-encrypted identity
(so the authority can trace any issued key back to its owner), and a public
shadow key that regional chains use to execute keyword searches on the
holder's behalf.

Encryption is deliberately light: four source-group and three target-group
exponentiations regardless of policy size; the per-row policy material is
plain field arithmetic.  The pairing-heavy work happens at search time,
which is executed by chain contracts rather than by on-board units.

Component map (sizes at the default profile):

    public params   4 G + 2 G_T                      (768 bytes)
    secret key      (|attrs|+1) G + 5 scalars        ((A+1)*128 + 100 bytes)
    ciphertext      4 G + 2 G_T + 2L scalars + payload
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import lsss
from .counters import OpCounter
from .pairing import BilinearGroup
from .primitives import (
    AttestationError,
    AttestationKey,
    IntegrityError,
    SeededRng,
    digest,
    sym_decrypt,
    sym_encrypt,
    verify_attestation,
)


class AuthorizationError(Exception):
    """Caller lacks a valid, unrevoked certificate."""


class RegistrationDenied(Exception):
    """Identity is revoked and may not re-register."""


class StructuralError(Exception):
    """Malformed tuple shapes (distinct from a no-match search result)."""


class TraceError(Exception):
    """Key identity payload does not decrypt: forged-key signal."""


class DecryptionError(Exception):
    """Search bundle does not belong to this secret key."""


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass
class PublicParams:
    group: BilinearGroup
    g: tuple                # generator
    id_base: tuple          # g^(identity exponent), pairs against anchors
    blind_base: tuple       # g^(blinding exponent), base of the GT anchors
    aux_base: tuple         # consistency base for upload validation
    gt_base: tuple          # e(g, blind_base)
    gt_auth: tuple          # gt_base^(master exponent)


@dataclass
class MasterSecret:
    master_exp: int
    blind_exp: int
    id_exp: int
    trace_key: bytes


@dataclass
class SystemKeys:
    public: PublicParams
    master: MasterSecret


@dataclass
class Certificate:
    user_id: str
    vehicle_info: str
    attestation: bytes
    status: str = "valid"

    def message(self) -> bytes:
        return b"rcabe-cert\x00" + self.user_id.encode() + b"\x00" + self.vehicle_info.encode()


@dataclass
class SecretKey:
    identity_ct: bytes      # AEAD-encrypted user id, decryptable only by the TA
    id_tag: int             # hash of identity_ct; lives in exponents
    anchor: tuple           # g^(master*blind / (id_exp + id_tag))
    attr_elems: dict        # label -> g^(mask * H(label) / attr_blind)
    mask: int
    link: int
    attr_blind: int
    tag_blind: int
    attrs: tuple


@dataclass
class PublicShadow:
    anchor_pub: tuple       # anchor^(mask*link)
    gt_pub: tuple           # gt_base^mask
    attr_pub: dict          # label -> g^(mask * H(label))
    link_pub: tuple         # blind_base^link
    tag_pub: tuple          # blind_base^tag_blind
    attrs: tuple
    key_tag: str            # revocation handle for this key


@dataclass
class Metadata:
    event: str
    region: str
    time: float

    def as_dict(self) -> dict:
        return {"event": self.event, "region": self.region, "time": self.time}


@dataclass
class CiphertextRecord:
    blind_ct: tuple         # GT: hides the payload-key seed
    g_s: tuple              # g^s
    id_s: tuple             # id_base^s
    blind_s: tuple          # blind_base^s
    aux_s: tuple            # aux_base^s
    row_scalars: list       # per policy row, main share track
    row_scalars_aux: list   # per policy row, auxiliary share track
    kw_tag: tuple           # GT: keyword-binding tag
    payload: bytes
    encrypted: bool         # True: payload is AEAD ciphertext; False: raw bytes
    policy: lsss.AccessPolicy
    metadata: Metadata


@dataclass
class Trapdoor:
    unblind: int            # exponent that strips the search blinding for the holder
    gamma_q: int
    id_tag: int             # equals the secret key's id_tag
    main_q: int
    aux_q: int
    scale_q: int
    kw_q: int


@dataclass
class SearchBundle:
    blind_ct: tuple
    gamma_part: tuple
    lam_part: tuple
    payload: bytes
    encrypted: bool


@dataclass
class RevocationEntry:
    kind: str               # "key" or "attr"
    tag: str

    def handle(self) -> str:
        return "%s:%s" % (self.kind, self.tag)


def key_tag_for_scalar(group: BilinearGroup, id_tag: int) -> str:
    return digest(group.ser_zp(id_tag), tag="key-tag").hex()


# ---------------------------------------------------------------------------
# Global setup
# ---------------------------------------------------------------------------

def global_setup(group: BilinearGroup, rng: SeededRng) -> SystemKeys:
    """Generate public parameters and the master secret."""
    master_exp = group.random_scalar(rng)
    blind_exp = group.random_scalar(rng)
    id_exp = group.random_scalar(rng)
    aux_exp = group.random_scalar(rng)   # discarded: nobody keeps this log
    trace_key = rng.take(32)
    with group.counter.phase("setup"):
        blind_base = group.pow_g(group.g, blind_exp)
        id_base = group.pow_g(group.g, id_exp)
        aux_base = group.pow_g(group.g, aux_exp)
        gt_base = group.pair(group.g, blind_base)
        gt_auth = group.pow_gt(gt_base, master_exp)
    public = PublicParams(
        group=group,
        g=group.g,
        id_base=id_base,
        blind_base=blind_base,
        aux_base=aux_base,
        gt_base=gt_base,
        gt_auth=gt_auth,
    )
    master = MasterSecret(
        master_exp=master_exp,
        blind_exp=blind_exp,
        id_exp=id_exp,
        trace_key=trace_key,
    )
    return SystemKeys(public=public, master=master)


# ---------------------------------------------------------------------------
# Trusted authority: registration, key issuance, tracing
# ---------------------------------------------------------------------------

class TrustedAuthority:
    """Owns the master secret, the certificate registry, and tracing."""

    def __init__(self, keys: SystemKeys, attest: AttestationKey) -> None:
        self.keys = keys
        self.attest = attest
        self.registry: dict[str, Certificate] = {}
        self.revoked_ids: set[str] = set()

    @classmethod
    def create(cls, group: BilinearGroup, rng: SeededRng) -> "TrustedAuthority":
        keys = global_setup(group, rng.child("setup"))
        return cls(keys, AttestationKey.from_rng(rng.child("attest")))

    @property
    def public(self) -> PublicParams:
        return self.keys.public

    def register(self, user_id: str, vehicle_info: str) -> Certificate:
        if not user_id:
            raise ValueError("user id must be nonempty")
        if user_id in self.revoked_ids:
            raise RegistrationDenied("identity %r is revoked" % user_id)
        existing = self.registry.get(user_id)
        if existing is not None:
            return existing
        cert = Certificate(user_id=user_id, vehicle_info=vehicle_info, attestation=b"")
        cert.attestation = self.attest.sign(cert.message())
        self.registry[user_id] = cert
        return cert

    def check_certificate(self, cert: Certificate) -> None:
        if cert.status != "valid" or cert.user_id in self.revoked_ids:
            raise AuthorizationError("certificate for %r is not valid" % cert.user_id)
        try:
            verify_attestation(self.attest.public_bytes, cert.message(), cert.attestation)
        except AttestationError as exc:
            raise AuthorizationError(str(exc)) from exc

    def keygen(self, cert: Certificate, attrs, rng: SeededRng):
        """Issue a (secret key, public shadow) pair for a certified user."""
        self.check_certificate(cert)
        attrs = tuple(sorted(set(attrs)))
        if not attrs:
            raise ValueError("attribute set must be nonempty")
        group = self.public.group
        order = group.r
        hashes = group.hash
        master = self.keys.master

        while True:
            identity_ct = sym_encrypt(master.trace_key, cert.user_id.encode(), rng)
            id_tag = hashes.to_scalar(identity_ct, tag="id-tag")
            if (master.id_exp + id_tag) % order != 0:
                break

        mask = group.random_scalar(rng)
        attr_blind = group.random_scalar(rng)
        bind_input = group.ser_zp(id_tag) + group.ser_zp(mask) + group.ser_zp(attr_blind)
        link = hashes.to_scalar(bind_input, tag="link-blind")
        tag_blind = hashes.to_scalar(bind_input, tag="tag-blind")

        anchor_exp = (
            master.master_exp
            * master.blind_exp
            * pow((master.id_exp + id_tag) % order, -1, order)
        ) % order
        with group.counter.phase("keygen"):
            anchor = group.pow_g(group.g, anchor_exp)
            attr_elems = {
                x: group.pow_g(
                    group.g,
                    mask * hashes.to_scalar(x.encode(), tag="attr") % order
                    * pow(attr_blind, -1, order) % order,
                )
                for x in attrs
            }
        sk = SecretKey(
            identity_ct=identity_ct,
            id_tag=id_tag,
            anchor=anchor,
            attr_elems=attr_elems,
            mask=mask,
            link=link,
            attr_blind=attr_blind,
            tag_blind=tag_blind,
            attrs=attrs,
        )
        return sk, derive_shadow(self.public, sk)

    def trace(self, sk: SecretKey) -> str:
        """Recover the registered identity embedded in a secret key."""
        try:
            user_id = sym_decrypt(self.keys.master.trace_key, sk.identity_ct)
        except IntegrityError as exc:
            raise TraceError("identity payload does not decrypt: forged key") from exc
        if self.public.group.hash.to_scalar(sk.identity_ct, tag="id-tag") != sk.id_tag:
            raise TraceError("identity tag mismatch: forged key")
        return user_id.decode()

    def update_attributes(self, sk_old: SecretKey, new_attrs, rng: SeededRng):
        """Reissue a key pair over a new attribute set; returns the new pair
        plus a revocation entry identifying the superseded key."""
        if not new_attrs:
            raise ValueError("new attribute set must be nonempty")
        user_id = self.trace(sk_old)
        cert = self.registry.get(user_id)
        if cert is None:
            raise AuthorizationError("no certificate on file for %r" % user_id)
        sk_new, shadow_new = self.keygen(cert, new_attrs, rng)
        entry = RevocationEntry(
            kind="key", tag=key_tag_for_scalar(self.public.group, sk_old.id_tag)
        )
        return sk_new, shadow_new, entry


def derive_shadow(pub: PublicParams, sk: SecretKey) -> PublicShadow:
    """Publishable search handle for a secret key (chain-side counterpart)."""
    group = pub.group
    with group.counter.phase("shadow"):
        anchor_pub = group.pow_g(sk.anchor, sk.mask * sk.link % group.r)
        gt_pub = group.pow_gt(pub.gt_base, sk.mask)
        attr_pub = {
            x: group.pow_g(elem, sk.attr_blind) for x, elem in sk.attr_elems.items()
        }
        link_pub = group.pow_g(pub.blind_base, sk.link)
        tag_pub = group.pow_g(pub.blind_base, sk.tag_blind)
    return PublicShadow(
        anchor_pub=anchor_pub,
        gt_pub=gt_pub,
        attr_pub=attr_pub,
        link_pub=link_pub,
        tag_pub=tag_pub,
        attrs=sk.attrs,
        key_tag=key_tag_for_scalar(group, sk.id_tag),
    )


# ---------------------------------------------------------------------------
# Encrypt / trapdoor / search / decrypt
# ---------------------------------------------------------------------------

def encrypt(
    pub: PublicParams,
    data: bytes,
    policy: lsss.AccessPolicy,
    keyword: str,
    flag: bool,
    rng: SeededRng,
    metadata: Metadata | None = None,
) -> CiphertextRecord:
    """Dual-mode encryption: same tuple shape whether or not the payload is
    symmetrically sealed (flag False stores the bytes verbatim)."""
    if policy.rows < 1:
        raise ValueError("policy must have at least one row")
    if not keyword:
        raise ValueError("keyword must be nonempty")
    group = pub.group
    order = group.r
    hashes = group.hash

    kw = hashes.to_scalar(keyword.encode(), tag="keyword")
    kw_inv = pow(kw, -1, order)
    s = group.random_scalar(rng)
    beta = group.random_gt(rng)
    main = lsss.share_secret(policy, group.random_scalar(rng), rng)
    aux = lsss.share_secret(policy, group.random_scalar(rng), rng)

    row_scalars, row_scalars_aux = [], []
    for i, label in enumerate(policy.row_labels):
        t_inv = pow(hashes.to_scalar(label.encode(), tag="attr"), -1, order)
        row_scalars.append(main.shares[i] * t_inv % order * kw_inv % order)
        row_scalars_aux.append(aux.shares[i] * t_inv % order * kw_inv % order)

    with group.counter.phase("encrypt"):
        g_s = group.pow_g(pub.g, s)
        id_s = group.pow_g(pub.id_base, s)
        blind_s = group.pow_g(pub.blind_base, s)
        aux_s = group.pow_g(pub.aux_base, s)
        blind_ct = group.mul_gt(beta, group.pow_gt(pub.gt_auth, s))
        tag_base_exp = ((main.secret + aux.secret) * kw_inv + kw) % order
        kw_tag = group.mul_gt(
            group.pow_gt(pub.gt_base, tag_base_exp),
            group.pow_gt(pub.gt_auth, s * kw_inv % order),
        )

    if flag:
        payload = sym_encrypt(hashes.to_symkey(group.ser_gt(beta)), data, rng)
    else:
        payload = data
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
        encrypted=flag,
        policy=policy,
        metadata=metadata or Metadata(event="generic", region="local", time=0.0),
    )


def trapdoor(sk: SecretKey, keyword: str, order: int, hashes, rng: SeededRng) -> Trapdoor:
    """Randomized keyword trapdoor; pure scalar arithmetic on the OBU."""
    kq = hashes.to_scalar(keyword.encode(), tag="keyword")
    blind = rng.scalar(order) * rng.scalar(order) % order
    link_inv = pow(sk.link, -1, order)
    return Trapdoor(
        unblind=link_inv * pow(sk.mask, -2, order) % order,
        gamma_q=blind * link_inv % order * pow(kq, -1, order) % order,
        id_tag=sk.id_tag,
        main_q=blind * link_inv % order,
        aux_q=blind * pow(sk.tag_blind, -1, order) % order,
        scale_q=blind * sk.mask % order,
        kw_q=blind * kq % order,
    )


def search(
    pub: PublicParams,
    td: Trapdoor,
    shadow: PublicShadow,
    ct: CiphertextRecord,
    plan: lsss.ReconstructionPlan | None,
) -> SearchBundle | None:
    """Keyword match against one record: a bundle when the shadow's
    attributes satisfy the policy and the trapdoor keyword matches the
    ciphertext keyword, None otherwise."""
    if len(ct.row_scalars) != ct.policy.rows or len(ct.row_scalars_aux) != ct.policy.rows:
        raise StructuralError("row scalar tracks do not cover the policy matrix")
    if plan is None:
        return None
    if not plan.rows or len(plan.rows) != len(plan.coeffs):
        raise StructuralError("reconstruction plan is malformed")
    group = pub.group
    order = group.r
    labels = ct.policy.row_labels
    for i in plan.rows:
        if i < 0 or i >= len(labels):
            raise StructuralError("plan row %d outside the policy matrix" % i)
        if labels[i] not in shadow.attr_pub:
            return None

    with group.counter.phase("search"):
        gamma_in = group.mul_g(group.pow_g(ct.g_s, td.id_tag), ct.id_s)
        gamma = group.pair(shadow.anchor_pub, gamma_in)

        acc_main, acc_aux = None, None
        for i, coeff in zip(plan.rows, plan.coeffs):
            base = shadow.attr_pub[labels[i]]
            term_main = group.pow_g(base, ct.row_scalars[i] * coeff % order)
            term_aux = group.pow_g(base, ct.row_scalars_aux[i] * coeff % order)
            acc_main = term_main if acc_main is None else group.mul_g(acc_main, term_main)
            acc_aux = term_aux if acc_aux is None else group.mul_g(acc_aux, term_aux)
        lam_main = group.pair(shadow.link_pub, acc_main)
        lam_aux = group.pair(shadow.tag_pub, acc_aux)

        lhs = group.mul_gt(
            group.mul_gt(group.pow_gt(gamma, td.gamma_q), group.pow_gt(lam_main, td.main_q)),
            group.mul_gt(group.pow_gt(lam_aux, td.aux_q), group.pow_gt(shadow.gt_pub, td.kw_q)),
        )
        rhs = group.pow_gt(ct.kw_tag, td.scale_q)
        if not group.gt_eq(lhs, rhs):
            return None
        gamma_part = group.pow_gt(gamma, td.unblind)
        lam_part = group.pow_gt(group.mul_gt(lam_main, lam_aux), td.scale_q)
    return SearchBundle(
        blind_ct=ct.blind_ct,
        gamma_part=gamma_part,
        lam_part=lam_part,
        payload=ct.payload,
        encrypted=ct.encrypted,
    )


def decrypt(pub: PublicParams, bundle: SearchBundle, sk: SecretKey) -> bytes:
    """Unblind the payload key and open the payload (passthrough when the
    record was stored in the clear)."""
    if not bundle.encrypted:
        return bundle.payload
    group = pub.group
    with group.counter.phase("decrypt"):
        unsealed = group.pow_gt(bundle.gamma_part, sk.mask)
    beta = group.div_gt(bundle.blind_ct, unsealed)
    key = group.hash.to_symkey(group.ser_gt(beta))
    try:
        return sym_decrypt(key, bundle.payload)
    except IntegrityError as exc:
        raise DecryptionError("bundle does not match this key (or payload tampered)") from exc


# ---------------------------------------------------------------------------
# Key verification (structure check plus binding equations)
# ---------------------------------------------------------------------------

def verify_key(pub: PublicParams, sk: SecretKey) -> bool:
    """Accept (True) iff the key is structurally sound and all components
    are mutually consistent with the public parameters."""
    group = pub.group
    order = group.r
    scalars = (sk.id_tag, sk.mask, sk.link, sk.attr_blind, sk.tag_blind)
    if any(not isinstance(v, int) or not 0 < v < order for v in scalars):
        return False
    if not sk.attrs or set(sk.attrs) != set(sk.attr_elems):
        return False
    if not group.in_g(sk.anchor) or sk.anchor is None:
        return False
    if any(elem is None or not group.in_g(elem) for elem in sk.attr_elems.values()):
        return False

    bind_input = group.ser_zp(sk.id_tag) + group.ser_zp(sk.mask) + group.ser_zp(sk.attr_blind)
    if sk.link != group.hash.to_scalar(bind_input, tag="link-blind"):
        return False
    if sk.tag_blind != group.hash.to_scalar(bind_input, tag="tag-blind"):
        return False

    with group.counter.phase("verify"):
        target = group.mul_g(pub.id_base, group.pow_g(pub.g, sk.id_tag))
        if not group.gt_eq(group.pair(sk.anchor, target), pub.gt_auth):
            return False
        mask_base = group.pow_g(pub.g, sk.mask)
        for label, elem in sk.attr_elems.items():
            t = group.hash.to_scalar(label.encode(), tag="attr")
            if not group.g_eq(group.pow_g(elem, sk.attr_blind), group.pow_g(mask_base, t)):
                return False
    return True


def validate_ciphertext(pub: PublicParams, ct: CiphertextRecord) -> bool:
    """Chain-side well-formedness: all four source-group components share
    one exponent, and the scalar tracks cover the policy."""
    group = pub.group
    if len(ct.row_scalars) != ct.policy.rows or len(ct.row_scalars_aux) != ct.policy.rows:
        return False
    for P in (ct.g_s, ct.id_s, ct.blind_s, ct.aux_s):
        if P is None or not group.in_g(P):
            return False
    pairs = (
        (ct.id_s, pub.id_base),
        (ct.blind_s, pub.blind_base),
        (ct.aux_s, pub.aux_base),
    )
    for component, base in pairs:
        if not group.gt_eq(group.pair(component, pub.g), group.pair(base, ct.g_s)):
            return False
    return True
