"""Simulation services: costs, losses, learner, agents, baseline and harness"""
