"""Bundled scanner-name registry.

The feed schema keys per-scanner verdicts by display name. This is the
reference list of 95 names the library recognizes; names outside it are
accepted by the parser but flagged as unknown.
"""

from __future__ import annotations

SCANNER_NAMES: tuple[str, ...] = (
    "Abusix",
    "ADMINUSLabs",
    "AICC (MONITORAPP)",
    "Alexa",
    "AlienVault",
    "alphaMountain.ai",
    "Antiy-AVL",
    "Armis",
    "AutoShun",
    "Avira",
    "BADWARE.INFO",
    "Baidu-International",
    "BenkowCC",
    "BforeAi",
    "BitDefender",
    "Blueliv",
    "Certego",
    "CINS",
    "CMC Threat Intelligence",
    "CRDF",
    "C-SIRT",
    "CLEAN MX",
    "Comodo Valkyrie Verdict",
    "Cyan Digital Security",
    "CyberCrime",
    "CyRadar",
    "desenmascara.me",
    "DNS8",
    "Dr.Web",
    "EmergingThreats",
    "Emsisoft",
    "ESET",
    "ESTsecurity",
    "Forcepoint ThreatSeeker",
    "Feodo Tracker",
    "FraudSense",
    "Fortinet",
    "G-Data",
    "Google Safebrowsing",
    "GreenSnow",
    "IPSum",
    "Hoplite Industries",
    "Lumu",
    "K7AntiVirus",
    "Lionic",
    "Kaspersky",
    "MalBeacon",
    "Malekal",
    "Malsilo",
    "Malware Domain Blocklist",
    "Malware Domain List",
    "MalwarePatrol",
    "Malwarebytes hpHosts",
    "Malwared",
    "Malwares.com",
    "Netcraft",
    "NotMining",
    "OpenPhish",
    "Palevo Tracker",
    "Phishlabs",
    "Phishtank",
    "Prebytes",
    "Quickheal",
    "Quttera",
    "Rising",
    "Sangfor",
    "SafeToOpen",
    "Scantitan",
    "SCUMWARE.org",
    "SecureBrain",
    "Sophos",
    "Spam404",
    "SpyEye Tracker",
    "Spamhaus",
    "StopBadware",
    "Sucuri SiteCheck",
    "ThreatHive",
    "Trend Micro Site Safety Center",
    "Trustwave",
    "urlQuery",
    "Virusdie External Site Scan",
    "VX Vault",
    "Web Security Guard",
    "Wepawet",
    "Yandex Safebrowsing",
    "Zeus Tracker",
    "Zvelo",
    "Botvrij.eu",
    "Artists Against 419",
    "Nucleon",
    "Ransomware Tracker",
    "URLhaus",
    "Webroot",
    "ZeroCERT",
    "securolytics",
)

SCANNER_NAME_SET: frozenset[str] = frozenset(SCANNER_NAMES)


def is_known_scanner(name: str) -> bool:
    """Return True if `name` is in the bundled registry."""
    return name in SCANNER_NAME_SET
