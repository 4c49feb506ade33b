import json

import pytest

from cgot_sim import (
    BackendUnavailable,
    InvalidInput,
    ScriptedBackend,
    build_prompt,
    build_system,
    count_tokens_proxy,
    load_scenario,
    make_backend,
    parse_completion,
    render_completion,
)
from cgot_sim.backend import (
    PROMPT_SECTIONS,
    AgentView,
    HttpBackend,
    InferenceRequest,
    PeerDecision,
    nearest_pending,
    pending_sites,
    prompt_sections_ok,
    scripted_policy,
    subject_view_of,
)
from cgot_sim.world import entrance


def fresh_system(mode="cgot"):
    return build_system(load_scenario("default"), mode, 0)


def view_for(system, unit_id, peers=(), is_controller=True, subject_id=None):
    subject = system.agents[subject_id or unit_id]
    others = tuple(
        subject_view_of(a, [])
        for _, a in sorted(system.agents.items())
        if a.active and not a.disabled and a.id != subject.id
    )
    return AgentView(
        decider_id=unit_id,
        subject=subject_view_of(subject, []),
        is_controller=is_controller,
        mode=system.mode,
        turn=system.env.turn,
        seed=system.seed,
        env=system.env,
        peers=tuple(peers),
        others=others,
    )


class TestTokenProxy:
    def test_documented_values(self):
        assert count_tokens_proxy("") == 0
        assert count_tokens_proxy("abcd") == 1
        assert count_tokens_proxy("abcde") == 2

    def test_four_hundred_character_prompt(self):
        assert count_tokens_proxy("x" * 400) == 100


class TestPrompt:
    def test_six_sections_in_order(self):
        system = fresh_system()
        prompt = build_prompt(view_for(system, "V1"))
        assert prompt_sections_ok(prompt)
        positions = [prompt.find(h) for h in PROMPT_SECTIONS]
        assert all(p >= 0 for p in positions)
        assert positions == sorted(positions)

    def test_sections_fixed_across_modes(self):
        for mode in ("cgot", "got"):
            system = fresh_system(mode)
            assert prompt_sections_ok(build_prompt(view_for(system, "RA")))

    def test_peer_decisions_rendered(self):
        system = fresh_system()
        peers = (PeerDecision("RA", "RA", "Wait"), PeerDecision("V1", "C9", "Move(B1)"))
        prompt = build_prompt(view_for(system, "V2", peers=peers))
        assert "RA -> Wait" in prompt
        assert "V1 (for C9) -> Move(B1)" in prompt

    def test_sections_ok_rejects_out_of_order(self):
        shuffled = "\n".join(reversed(PROMPT_SECTIONS))
        assert not prompt_sections_ok(shuffled)


class TestCompletionGrammar:
    def test_round_trip(self):
        text = render_completion(("look around",), ("Move(B1)",))
        thoughts, actions = parse_completion(text)
        assert thoughts == ["look around"]
        assert actions == ["Move(B1)"]

    def test_stray_lines_ignored(self):
        thoughts, actions = parse_completion(
            "preamble\nTHOUGHT: a\nnoise\nACTION: Wait\n\n"
        )
        assert thoughts == ["a"]
        assert actions == ["Wait"]


class TestScriptedPolicy:
    def test_cleaner_at_dirty_building_cleans(self):
        system = fresh_system()
        system.agents["RB"].location = "B1"
        thoughts, actions = scripted_policy(view_for(system, "RB"))
        assert actions == ["Clean(B1)"]
        assert thoughts  # the decision is explained

    def test_no_reachable_work_waits(self):
        system = fresh_system()
        system.env.pending_tasks.clear()
        system.env.packages.clear()
        _, actions = scripted_policy(view_for(system, "RB"))
        assert actions == ["Wait"]

    def test_all_tasks_complete_waits(self):
        system = fresh_system()
        for b in system.env.buildings.values():
            b.needs_cleaning = False
            b.cleaned = True
            b.delivery_stage1_done = True
            b.delivery_stage2_done = True
        system.env.packages = {"p1": "inside:B1", "p2": "inside:B2"}
        for agent_id in ("V1", "V2", "RA", "RB"):
            _, actions = scripted_policy(view_for(system, agent_id))
            assert actions == ["Wait"]

    def test_vehicle_picks_up_then_moves(self):
        system = fresh_system()
        _, actions = scripted_policy(view_for(system, "V1"))
        assert actions == ["PickupPackage(p1)"]
        # loaded, and with no colocated robot to offer a ride to, it drives
        system.agents["V1"].cargo.add("p1")
        system.env.packages["p1"] = "carried:V1"
        system.agents["RA"].location = "B3"
        system.agents["RB"].location = "B3"
        _, actions2 = scripted_policy(view_for(system, "V1"))
        assert actions2 == ["Move(B1)"]

    def test_vehicle_offers_combine_robot_waits(self):
        system = fresh_system()
        # loaded vehicle next to idle robots: pickup no longer applies, so the
        # vehicle teams up with the lowest-id robot whose work is elsewhere
        system.agents["V1"].cargo.add("p1")
        system.env.packages["p1"] = "carried:V1"
        _, v1_actions = scripted_policy(view_for(system, "V1"))
        assert v1_actions == ["Combine(V1, RA)"]
        ra_view = view_for(
            system, "RA", peers=(PeerDecision("V1", "V1", "Combine(V1, RA)"),)
        )
        _, ra_actions = scripted_policy(ra_view)
        assert ra_actions == ["Wait"]

    def test_passenger_member_waits(self):
        system = fresh_system("got")
        view = view_for(system, "RA", is_controller=False)
        _, actions = scripted_policy(view)
        assert actions == ["Wait"]

    def test_peer_package_claim_respected(self):
        system = fresh_system()
        system.env.pending_tasks = [
            t for t in system.env.pending_tasks if t.kind == "Deliver"
        ]
        peers = (PeerDecision("V1", "V1", "PickupPackage(p1)"),)
        _, actions = scripted_policy(view_for(system, "V2", peers=peers))
        assert actions == ["PickupPackage(p2)"]

    def test_deterministic(self):
        system = fresh_system()
        view = view_for(system, "V1")
        assert scripted_policy(view) == scripted_policy(view)


class TestPendingSites:
    def test_cleaner_sees_dirty_buildings(self):
        system = fresh_system()
        sites = pending_sites(
            system.env, frozenset({"CleanBuilding"}), cargo=()
        )
        assert sites == ["B1", "B3"]

    def test_deliverer_sees_delivery_targets_proactively(self):
        system = fresh_system()
        sites = pending_sites(system.env, frozenset({"DeliverInside"}), cargo=())
        assert sites == ["B1", "B2"]

    def test_carrier_with_cargo_sees_its_destination(self):
        system = fresh_system()
        system.env.packages["p1"] = "carried:V1"
        sites = pending_sites(
            system.env, frozenset({"CarryPackage", "CarryRobot"}), cargo=("p1",)
        )
        assert "B1" in sites

    def test_blocked_sites_excluded(self):
        system = fresh_system()
        system.env.map.blocked.add("B1")
        sites = pending_sites(system.env, frozenset({"CleanBuilding"}), cargo=())
        assert sites == ["B3"]

    def test_nearest_pending_tie_breaks_low_id(self):
        system = fresh_system()
        # B1 and B3 both need cleaning and both sit one hop away
        near = nearest_pending(
            system.env, "PackageSite", frozenset({"CleanBuilding"}), ()
        )
        assert near == "B1"


class TestScriptedBackend:
    def test_pure_and_usage_counted(self):
        system = fresh_system()
        view = view_for(system, "V1")
        request = InferenceRequest(
            agent_id="V1", prompt=build_prompt(view), turn=0, view=view
        )
        backend = ScriptedBackend()
        r1 = backend.infer(request)
        r2 = backend.infer(request)
        assert r1 == r2
        assert r1.actions
        assert r1.usage.prompt_tokens == count_tokens_proxy(request.prompt)
        assert r1.usage.completion_tokens == count_tokens_proxy(
            render_completion(tuple(r1.thoughts), tuple(r1.actions))
        )

    def test_actions_never_empty(self):
        system = fresh_system()
        system.env.pending_tasks.clear()
        view = view_for(system, "RB")
        request = InferenceRequest("RB", build_prompt(view), 0, view)
        assert ScriptedBackend().infer(request).actions == ("Wait",)


class TestHttpBackend:
    def test_missing_base_url_rejected(self, monkeypatch):
        for var in ("CGOT_LLM_BASE_URL", "CGOT_LLM_MODEL", "CGOT_LLM_API_KEY"):
            monkeypatch.delenv(var, raising=False)
        with pytest.raises(InvalidInput):
            HttpBackend()

    def test_parses_provider_response(self):
        calls = {}

        class FakeResponse:
            status_code = 200

            def json(self):
                return {
                    "choices": [
                        {
                            "message": {
                                "content": "THOUGHT: hm\nACTION: Move(B1)"
                            }
                        }
                    ],
                    "usage": {"prompt_tokens": 11, "completion_tokens": 7},
                }

            def raise_for_status(self):
                return None

        class FakeSession:
            def post(self, url, data=None, headers=None, timeout=None):
                calls["url"] = url
                calls["body"] = json.loads(data)
                calls["headers"] = headers
                return FakeResponse()

        backend = HttpBackend(
            base_url="http://llm.test/v1",
            model="m",
            api_key="sekrit",
            session=FakeSession(),
        )
        system = fresh_system()
        view = view_for(system, "V1")
        request = InferenceRequest("V1", build_prompt(view), 0, view)
        response = backend.infer(request)
        assert response.actions == ("Move(B1)",)
        assert response.thoughts == ("hm",)
        assert response.usage.prompt_tokens == 11
        assert response.usage.completion_tokens == 7
        assert calls["url"] == "http://llm.test/v1/chat/completions"
        assert calls["body"]["temperature"] == 0
        assert calls["body"]["model"] == "m"
        assert calls["headers"]["Authorization"] == "Bearer sekrit"
        assert calls["body"]["messages"][-1] == {
            "role": "user",
            "content": request.prompt,
        }

    def test_unavailable_after_retries(self):
        attempts = []

        class DownSession:
            def post(self, url, **kwargs):
                attempts.append(url)
                raise OSError("connection refused")

        backend = HttpBackend(
            base_url="http://llm.test/v1", retries=2, session=DownSession()
        )
        system = fresh_system()
        view = view_for(system, "V1")
        request = InferenceRequest("V1", build_prompt(view), 0, view)
        with pytest.raises(BackendUnavailable):
            backend.infer(request)
        assert len(attempts) == 3  # first try plus two retries


class TestFactory:
    def test_names(self):
        assert isinstance(make_backend("scripted"), ScriptedBackend)
        with pytest.raises(InvalidInput):
            make_backend("nonsense")
