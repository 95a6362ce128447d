"""Monitoring and metrics module"""
