"""Pydantic schemas for experiment configs and reports"""
