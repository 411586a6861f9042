import re

#a non-empty hexadecimal string (digests, public keys)
HEX = r'[0-9a-fA-F]+'

#the timelock escrow script, with the three substitutions captured
CLTV_TEMPLATE = '{tau} CHECKLOCKTIMEVERIFY IF HASH256 {c_hex} EQUALVERIFY {pk_hex} CHECKSIGVERIFY ENDIF'

CLTV_SCRIPT = re.compile(
    r'(?P<tau>\d+) CHECKLOCKTIMEVERIFY IF HASH256 (?P<c_hex>' + HEX + r') '
    r'EQUALVERIFY (?P<pk_hex>' + HEX + r') CHECKSIGVERIFY ENDIF'
)

HEX_STRING = re.compile(HEX)
