import os
import re

import pytest

from rba.hotp import hotp
from rba.verification import (ChallengeService, MessengerError,
                              OutboxMessenger, PendingChallenge)

SECRET = b"0123456789abcdef0123"
FEATURES = {"ip": "192.0.2.1", "ua_full": "agent", "asn": None}


class RecordingMessenger:
    def __init__(self):
        self.messages = []

    def send(self, contact, subject, body):
        self.messages.append((contact, subject, body))


class FailingMessenger:
    def send(self, contact, subject, body):
        raise MessengerError("smtp down")


class FakeClock:
    def __init__(self, now=1000.0):
        self.now = now

    def __call__(self):
        return self.now


@pytest.fixture
def service():
    messenger = RecordingMessenger()
    clock = FakeClock()
    svc = ChallengeService(messenger, clock=clock)
    return svc, messenger, clock


def test_issue_sends_code_in_subject_and_body(service):
    svc, messenger, _ = service
    svc.issue_challenge("alice", "alice@example.org", SECRET, 7, FEATURES)
    assert len(messenger.messages) == 1
    contact, subject, body = messenger.messages[0]
    assert contact == "alice@example.org"
    code = hotp(SECRET, 7)
    assert subject == f"Your verification code: {code}"
    assert code in body
    assert "192.0.2.1" in body


def test_correct_code_consumes_challenge(service):
    svc, _, _ = service
    svc.issue_challenge("alice", "a@example.org", SECRET, 3, FEATURES)
    bound = svc.verify_code("alice", hotp(SECRET, 3), SECRET)
    assert bound == FEATURES
    # consumed: the same code never verifies again
    assert svc.verify_code("alice", hotp(SECRET, 3), SECRET) is None


def test_wrong_codes_exhaust_the_challenge(service):
    svc, _, _ = service
    svc.issue_challenge("alice", "a@example.org", SECRET, 3, FEATURES)
    for _ in range(3):
        assert svc.verify_code("alice", "000000", SECRET) is None
    # attempts exhausted: even the correct code now fails
    assert svc.verify_code("alice", hotp(SECRET, 3), SECRET) is None


def test_expired_challenge_never_verifies(service):
    svc, _, clock = service
    svc.issue_challenge("alice", "a@example.org", SECRET, 3, FEATURES)
    clock.now += 600
    assert svc.verify_code("alice", hotp(SECRET, 3), SECRET) is None
    assert svc.active_challenge("alice") is None


def test_reissue_invalidates_previous_challenge(service):
    svc, _, _ = service
    svc.issue_challenge("alice", "a@example.org", SECRET, 3, FEATURES)
    svc.issue_challenge("alice", "a@example.org", SECRET, 4, FEATURES)
    assert svc.verify_code("alice", hotp(SECRET, 3), SECRET) is None
    # the failed attempt burned one try on the active challenge only
    assert svc.verify_code("alice", hotp(SECRET, 4), SECRET) == FEATURES


def test_no_contact_is_an_error(service):
    svc, _, _ = service
    with pytest.raises(ValueError):
        svc.issue_challenge("alice", "", SECRET, 3, FEATURES)


def test_messenger_failure_cancels_challenge():
    svc = ChallengeService(FailingMessenger())
    with pytest.raises(MessengerError):
        svc.issue_challenge("alice", "a@example.org", SECRET, 3, FEATURES)
    assert svc.active_challenge("alice") is None
    assert svc.verify_code("alice", hotp(SECRET, 3), SECRET) is None


def test_verify_without_challenge_is_rejected(service):
    svc, _, _ = service
    assert svc.verify_code("alice", "123456", SECRET) is None


def test_challenges_are_per_user(service):
    svc, _, _ = service
    svc.issue_challenge("alice", "a@example.org", SECRET, 1, FEATURES)
    svc.issue_challenge("bob", "b@example.org", SECRET, 2, FEATURES)
    assert svc.verify_code("bob", hotp(SECRET, 2), SECRET) == FEATURES
    assert svc.verify_code("alice", hotp(SECRET, 1), SECRET) == FEATURES


def test_pending_challenge_expiry_helper():
    challenge = PendingChallenge(user="u", counter=1, issued_at=100.0,
                                 expiry_s=600)
    assert not challenge.expired(699.9)
    assert challenge.expired(700.0)


def test_outbox_messenger_writes_rfc5322_style_files(tmp_path):
    outdir = tmp_path / "outbox"
    messenger = OutboxMessenger(str(outdir), sender="svc@example.org")
    messenger.send("alice@example.org", "Your verification code: 123456",
                   "code 123456 inside")
    files = os.listdir(outdir)
    assert len(files) == 1
    text = (outdir / files[0]).read_text()
    assert "To: alice@example.org" in text
    assert "From: svc@example.org" in text
    assert re.search(r"^Subject: Your verification code: 123456$", text, re.M)
    assert "code 123456 inside" in text


def test_outbox_write_failure_raises_messenger_error(tmp_path):
    messenger = OutboxMessenger(str(tmp_path / "outbox"))
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    messenger.directory = str(blocker)  # writes now hit a non-directory
    with pytest.raises(MessengerError):
        messenger.send("a@example.org", "s", "b")
